//! Ensemble genetic programming for binary classification.
//!
//! Two subpopulations evolve together: expression trees fitted by RMSE on
//! their own bag of the training data, and forests (ensembles of those
//! trees) scored by voting accuracy on the whole training partition. The
//! crate also carries the single-tree GP and M3GP baselines and the
//! Kruskal-Wallis machinery used to compare methods.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below name the common `f64` instantiations.

pub mod baselines;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod expr_tree;
pub mod forest;
pub mod model_dump;
pub mod scalar;
pub mod selection;
pub mod stats;
pub mod tree_pop;

pub use baselines::gp::{gp_train, GpConfig, GpModel};
pub use baselines::mahalanobis::ClassModel;
pub use baselines::m3gp::{m3gp_train, M3gpConfig, M3gpModel};
pub use dataset::{Bag, CsvOptions, DataSplit, Dataset, FeatureMask, FeatureSimilarity, LabelColumn, SamplingMode};
pub use engine::{train, EngineConfig, TrainedModel, Variant};
pub use error::{Error, Result};
pub use expr_tree::{ExpressionTree, Node, TreeMetrics};
pub use forest::{Forest, VotingMode};
pub use model_dump::ModelDump;
pub use scalar::Scalar;
pub use stats::{kruskal_wallis, KwResult};
pub use tree_pop::{TreeArchive, TreeId, TreeIndividual};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type FeatureSimilarity64 = FeatureSimilarity<f64>;
pub type TreeArchive64 = TreeArchive<f64>;
pub type ClassModel64 = ClassModel<f64>;
pub type M3gpModel64 = M3gpModel<f64>;
