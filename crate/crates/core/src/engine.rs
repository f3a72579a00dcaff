//! The co-evolutionary loop: a tree subpopulation and a forest
//! subpopulation bred side by side, with the best forest pruned every
//! generation.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{sample_bag, DataSplit, Dataset, FeatureMask, FeatureSimilarity, SamplingMode};
use crate::error::{Error, Result};
use crate::expr_tree::{ramped_half_and_half, ExpressionTree, INIT_DEPTH, MUTATION_DEPTH};
use crate::forest::{
    accuracy, best_forest, breed_forests, ensemble_predict, Forest, ForestBreedParams, ForestScorer, PruneRecord,
    VotingMode,
};
use crate::scalar::Scalar;
use crate::selection::Selector;
use crate::tree_pop::{breed_generation, BreedParams, TreeArchive, TreeIndividual};

/// The six ensemble variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "eGP-N")]
    EgpN,
    #[serde(rename = "eGP-W")]
    EgpW,
    #[serde(rename = "eGP-N5")]
    EgpN5,
    #[serde(rename = "eGP-W5")]
    EgpW5,
    /// No feature sampling, normal voting.
    #[serde(rename = "eGPn")]
    EgpLowerN,
    /// No feature sampling, weighted voting.
    #[serde(rename = "eGPw")]
    EgpLowerW,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::EgpN,
        Variant::EgpW,
        Variant::EgpN5,
        Variant::EgpW5,
        Variant::EgpLowerN,
        Variant::EgpLowerW,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::EgpN => "eGP-N",
            Variant::EgpW => "eGP-W",
            Variant::EgpN5 => "eGP-N5",
            Variant::EgpW5 => "eGP-W5",
            Variant::EgpLowerN => "eGPn",
            Variant::EgpLowerW => "eGPw",
        }
    }

    pub fn voting(self) -> VotingMode {
        match self {
            Variant::EgpN | Variant::EgpN5 | Variant::EgpLowerN => VotingMode::Normal,
            Variant::EgpW | Variant::EgpW5 | Variant::EgpLowerW => VotingMode::Weighted,
        }
    }

    /// Feature-sampling variants draw random observation and feature counts;
    /// the others take 60% of the observations and every feature.
    pub fn sampling(self) -> SamplingMode {
        match self {
            Variant::EgpLowerN | Variant::EgpLowerW => SamplingMode::FixedObs,
            _ => SamplingMode::RandomObsFeat,
        }
    }

    /// Size of each subpopulation.
    pub fn default_subpop_size(self) -> usize {
        match self {
            Variant::EgpN5 | Variant::EgpW5 => 500,
            _ => 250,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown ensemble variant '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub variant: Variant,
    pub generations: usize,
    /// Trees and forests each; both subpopulations have this size.
    pub subpop_size: usize,
    pub cx_prob: f64,
    pub tournament_k: usize,
    pub init_depth: (usize, usize),
    pub mutation_depth: usize,
    /// Optional depth limit on bred trees. Off by default.
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl EngineConfig {
    pub fn new(variant: Variant, seed: u64) -> Self {
        Self {
            variant,
            generations: 100,
            subpop_size: variant.default_subpop_size(),
            cx_prob: 0.5,
            tournament_k: 5,
            init_depth: INIT_DEPTH,
            mutation_depth: MUTATION_DEPTH,
            max_depth: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subpop_size == 0 {
            return Err(Error::Config("subpopulation size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.cx_prob) {
            return Err(Error::Config(format!("crossover probability {} outside [0, 1]", self.cx_prob)));
        }
        if self.tournament_k == 0 {
            return Err(Error::Config("tournament size must be positive".into()));
        }
        if self.init_depth.0 > self.init_depth.1 {
            return Err(Error::Config("initial depth range is empty".into()));
        }
        Ok(())
    }
}

/// Per-generation summary; generation 0 describes the initial population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: usize,
    /// Empty for models without a regression-fitted tree population.
    pub best_tree_rmse: Option<f64>,
    pub best_forest_acc: f64,
    pub best_forest_size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub terminal_repairs: u64,
    pub prunes: Vec<PruneRecord>,
}

/// A tree of the final forest together with the features its bag allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMember {
    pub expr: ExpressionTree,
    pub features: FeatureMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub variant: Variant,
    pub voting: VotingMode,
    pub n_features: usize,
    pub members: Vec<ModelMember>,
    pub train_accuracy: f64,
    /// Seed of the tie-breaking stream used for training-time fitness.
    pub tie_seed: u64,
    pub split: DataSplit,
    pub trace: Vec<TraceRow>,
    pub diagnostics: Diagnostics,
}

impl TrainedModel {
    pub fn total_nodes(&self) -> usize {
        self.members.iter().map(|m| m.expr.len()).sum()
    }

    /// Labels for `rows`; normal-voting ties are drawn from `rng`.
    pub fn predict<T: Scalar, R: Rng + ?Sized, Row: AsRef<[T]>>(&self, rows: &[Row], rng: &mut R) -> Result<Vec<u8>> {
        if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != self.n_features) {
            return Err(Error::ColumnMismatch {
                expected: self.n_features,
                found: bad.as_ref().len(),
            });
        }
        let outputs: Vec<Vec<T>> = self
            .members
            .iter()
            .map(|m| {
                let mut stack = Vec::new();
                rows.iter().map(|r| m.expr.eval_with(r.as_ref(), &mut stack)).collect()
            })
            .collect();
        let slices: Vec<&[T]> = outputs.iter().map(Vec::as_slice).collect();
        Ok(ensemble_predict(&slices, self.voting, rng))
    }

    /// Labels for dataset rows with the training-time tie stream, so that
    /// predicting the training partition reproduces the recorded accuracy.
    pub fn predict_rows<T: Scalar>(&self, ds: &Dataset<T>, indices: &[usize]) -> Result<Vec<u8>> {
        let rows: Vec<&[T]> = indices.iter().map(|&i| ds.row(i)).collect();
        self.predict(&rows, &mut ChaCha8Rng::seed_from_u64(self.tie_seed))
    }

    pub fn accuracy_on<T: Scalar>(&self, ds: &Dataset<T>, indices: &[usize]) -> Result<f64> {
        let truth: Vec<u8> = indices.iter().map(|&i| ds.label(i)).collect();
        Ok(accuracy(&self.predict_rows(ds, indices)?, &truth))
    }
}

/// Runs the full co-evolution on `ds` and returns the best final forest.
pub fn train<T: Scalar>(ds: &Dataset<T>, cfg: &EngineConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tie_seed: u64 = rng.gen();
    let split = DataSplit::random(ds.n_obs(), &mut rng);
    if split.train.is_empty() {
        return Err(Error::InvalidData("training partition is empty".into()));
    }
    let sim = FeatureSimilarity::compute(ds, &split);
    let labels: Vec<u8> = split.train.iter().map(|&i| ds.label(i)).collect();
    let mode = cfg.variant.sampling();
    let voting = cfg.variant.voting();

    let mut archive = TreeArchive::new(split.train.clone());
    let mut live = Vec::with_capacity(cfg.subpop_size);
    for _ in 0..cfg.subpop_size {
        let bag = Arc::new(sample_bag(&split, ds.n_feat(), mode, &mut rng));
        let tree = ramped_half_and_half(&bag.mask, cfg.init_depth, &mut rng);
        live.push(archive.insert(TreeIndividual::new(tree, bag, ds), ds));
    }
    archive.set_live(live);

    let mut forests: Vec<Forest> = {
        let scorer = ForestScorer {
            archive: &archive,
            labels: &labels,
            mode: voting,
            tie_seed,
        };
        (0..cfg.subpop_size)
            .map(|_| {
                let id = archive.live()[rng.gen_range(0..archive.live().len())];
                scorer.forest(vec![id])
            })
            .collect()
    };

    let tree_params = BreedParams {
        cx_prob: cfg.cx_prob,
        selector: Selector::Tournament { k: cfg.tournament_k },
        mutation_depth: cfg.mutation_depth,
        max_depth: cfg.max_depth,
    };
    let forest_params = ForestBreedParams {
        cx_prob: cfg.cx_prob,
        tournament_k: cfg.tournament_k,
    };

    let mut diagnostics = Diagnostics::default();
    let mut trace = vec![trace_row(0, &archive, &forests)];
    for generation in 1..=cfg.generations {
        let stats = breed_generation(&mut archive, ds, &sim, &tree_params, &mut rng);
        diagnostics.terminal_repairs += stats.terminal_repairs as u64;

        let scorer = ForestScorer {
            archive: &archive,
            labels: &labels,
            mode: voting,
            tie_seed,
        };
        let (next, record) = breed_forests(&forests, &scorer, &forest_params, &mut rng);
        if record.accuracy_after < record.accuracy_before {
            return Err(Error::Invariant(format!(
                "pruning lowered accuracy from {} to {} in generation {generation}",
                record.accuracy_before, record.accuracy_after
            )));
        }
        diagnostics.prunes.push(record);
        forests = next;
        archive.collect_garbage(forests.iter().flat_map(|f| f.members.iter().copied()));

        let row = trace_row(generation, &archive, &forests);
        let prev = trace.last().expect("trace starts with generation 0");
        if row.best_forest_acc < prev.best_forest_acc {
            return Err(Error::Invariant(format!(
                "best forest accuracy fell from {} to {} in generation {generation}",
                prev.best_forest_acc, row.best_forest_acc
            )));
        }
        trace.push(row);
    }

    let best = &forests[best_forest(&forests, &archive)];
    let members = best
        .members
        .iter()
        .map(|&id| {
            let ind = archive.individual(id);
            ModelMember {
                expr: ind.tree.clone(),
                features: ind.bag.mask.clone(),
            }
        })
        .collect();
    Ok(TrainedModel {
        variant: cfg.variant,
        voting,
        n_features: ds.n_feat(),
        members,
        train_accuracy: best.accuracy,
        tie_seed,
        split,
        trace,
        diagnostics,
    })
}

fn trace_row<T: Scalar>(generation: usize, archive: &TreeArchive<T>, forests: &[Forest]) -> TraceRow {
    let best = &forests[best_forest(forests, archive)];
    TraceRow {
        generation,
        best_tree_rmse: Some(archive.individual(archive.best_live()).rmse.as_f64()),
        best_forest_acc: best.accuracy,
        best_forest_size: best.members.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(n: usize, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        while rows.len() < n {
            let x0: f64 = rng.gen_range(0.0..1.0);
            let x1: f64 = rng.gen_range(0.0..1.0);
            if (x0 - x1).abs() < 0.05 {
                continue;
            }
            labels.push(u8::from(x0 > x1));
            rows.push(vec![x0, x1]);
        }
        Dataset::new(rows, labels, None).unwrap()
    }

    fn small(variant: Variant, seed: u64, generations: usize) -> EngineConfig {
        EngineConfig {
            generations,
            subpop_size: 30,
            ..EngineConfig::new(variant, seed)
        }
    }

    #[test]
    fn variant_table() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            let expected = if matches!(v, Variant::EgpN5 | Variant::EgpW5) { 500 } else { 250 };
            assert_eq!(v.default_subpop_size(), expected);
        }
        assert_eq!(Variant::EgpW5.voting(), VotingMode::Weighted);
        assert_eq!(Variant::EgpLowerN.sampling(), SamplingMode::FixedObs);
        assert_eq!(Variant::EgpN.sampling(), SamplingMode::RandomObsFeat);
        assert!("eGP".parse::<Variant>().is_err());
        assert_eq!(serde_json::to_string(&Variant::EgpLowerW).unwrap(), "\"eGPw\"");
    }

    #[test]
    fn zero_generations_returns_a_singleton() {
        let ds = separable(60, 1);
        let m = train(&ds, &small(Variant::EgpN, 3, 0)).unwrap();
        assert_eq!(m.members.len(), 1);
        assert_eq!(m.trace.len(), 1);
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = separable(80, 2);
        let cfg = small(Variant::EgpW, 11, 5);
        assert_eq!(train(&ds, &cfg).unwrap(), train(&ds, &cfg).unwrap());
    }

    #[test]
    fn predict_matches_training_fitness() {
        let ds = separable(80, 3);
        for v in [Variant::EgpN, Variant::EgpLowerW] {
            let m = train(&ds, &small(v, 5, 4)).unwrap();
            assert_eq!(m.accuracy_on(&ds, &m.split.train).unwrap(), m.train_accuracy);
        }
    }

    #[test]
    fn predict_checks_width_and_single_tree() {
        let m = TrainedModel {
            variant: Variant::EgpN,
            voting: VotingMode::Normal,
            n_features: 2,
            members: vec![ModelMember {
                expr: "x0".parse().unwrap(),
                features: FeatureMask::full(2),
            }],
            train_accuracy: 1.0,
            tie_seed: 0,
            split: DataSplit {
                train: vec![],
                test: vec![],
            },
            trace: vec![],
            diagnostics: Diagnostics::default(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(m.predict(&[[0.0, 0.0]], &mut rng).unwrap(), vec![0]);
        assert_eq!(m.predict(&[[0.7, 0.0], [0.2, 9.0]], &mut rng).unwrap(), vec![1, 0]);
        assert!(matches!(
            m.predict(&[vec![1.0]], &mut rng),
            Err(Error::ColumnMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn no_feature_sampling_means_no_repairs() {
        let ds = separable(60, 4);
        let m = train(&ds, &small(Variant::EgpLowerN, 8, 8)).unwrap();
        assert_eq!(m.diagnostics.terminal_repairs, 0);
        assert!(m.members.iter().all(|mm| mm.features.is_full()));
    }

    #[test]
    fn rejects_bad_config() {
        let ds = separable(20, 5);
        let mut cfg = small(Variant::EgpN, 0, 1);
        cfg.cx_prob = 1.5;
        assert!(matches!(train(&ds, &cfg), Err(Error::Config(_))));
        cfg.cx_prob = 0.5;
        cfg.subpop_size = 0;
        assert!(matches!(train(&ds, &cfg), Err(Error::Config(_))));
    }
}
