//! Standard single-tree GP: RMSE against 0/1 targets, nearest-label prediction.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Bag, DataSplit, Dataset, FeatureMask};
use crate::engine::TraceRow;
use crate::error::{Error, Result};
use crate::expr_tree::{e_mutation, ramped_half_and_half, subtree_crossover, ExpressionTree, INIT_DEPTH, MUTATION_DEPTH};
use crate::forest::{accuracy, nearest_label};
use crate::scalar::Scalar;
use crate::selection::Selector;
use crate::tree_pop::TreeIndividual;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub population: usize,
    pub generations: usize,
    pub cx_prob: f64,
    pub tournament_k: usize,
    /// Chance that the smaller double-tournament finalist wins.
    pub parsimony_prob: f64,
    pub init_depth: (usize, usize),
    pub mutation_depth: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl GpConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            population: 500,
            generations: 100,
            cx_prob: 0.95,
            tournament_k: 5,
            parsimony_prob: 0.7,
            init_depth: INIT_DEPTH,
            mutation_depth: MUTATION_DEPTH,
            max_depth: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population == 0 || self.tournament_k == 0 {
            return Err(Error::Config("population and tournament size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.cx_prob) || !(0.0..=1.0).contains(&self.parsimony_prob) {
            return Err(Error::Config("probabilities must lie in [0, 1]".into()));
        }
        if self.init_depth.0 > self.init_depth.1 {
            return Err(Error::Config("initial depth range is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpModel {
    pub tree: ExpressionTree,
    pub n_features: usize,
    pub train_rmse: f64,
    pub train_accuracy: f64,
    pub split: DataSplit,
    pub trace: Vec<TraceRow>,
}

impl GpModel {
    pub fn predict<T: Scalar, Row: AsRef<[T]>>(&self, rows: &[Row]) -> Result<Vec<u8>> {
        let mut stack = Vec::new();
        rows.iter()
            .map(|r| {
                let r = r.as_ref();
                if r.len() != self.n_features {
                    return Err(Error::ColumnMismatch {
                        expected: self.n_features,
                        found: r.len(),
                    });
                }
                Ok(nearest_label(self.tree.eval_with(r, &mut stack)))
            })
            .collect()
    }

    pub fn accuracy_on<T: Scalar>(&self, ds: &Dataset<T>, indices: &[usize]) -> Result<f64> {
        let rows: Vec<&[T]> = indices.iter().map(|&i| ds.row(i)).collect();
        let truth: Vec<u8> = indices.iter().map(|&i| ds.label(i)).collect();
        Ok(accuracy(&self.predict(&rows)?, &truth))
    }
}

fn best<T: Scalar>(pop: &[TreeIndividual<T>]) -> usize {
    let mut b = 0;
    for (i, ind) in pop.iter().enumerate().skip(1) {
        let cur = &pop[b];
        if ind.rmse < cur.rmse || (ind.rmse == cur.rmse && ind.tree.len() < cur.tree.len()) {
            b = i;
        }
    }
    b
}

pub fn gp_train<T: Scalar>(ds: &Dataset<T>, cfg: &GpConfig) -> Result<GpModel> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let split = DataSplit::random(ds.n_obs(), &mut rng);
    let bag = Arc::new(Bag {
        obs: split.train.clone(),
        mask: FeatureMask::full(ds.n_feat()),
    });
    let selector = Selector::DoubleTournament {
        k: cfg.tournament_k,
        parsimony_prob: cfg.parsimony_prob,
    };
    let too_deep = |t: &ExpressionTree| cfg.max_depth.is_some_and(|d| t.depth() > d);

    let mut pop: Vec<TreeIndividual<T>> = (0..cfg.population)
        .map(|_| {
            let tree = ramped_half_and_half(&bag.mask, cfg.init_depth, &mut rng);
            TreeIndividual::new(tree, Arc::clone(&bag), ds)
        })
        .collect();

    let row = |pop: &[TreeIndividual<T>], generation: usize| {
        let b = &pop[best(pop)];
        let preds: Vec<u8> = b.tree.eval_rows(ds, &split.train).into_iter().map(nearest_label).collect();
        let truth: Vec<u8> = split.train.iter().map(|&i| ds.label(i)).collect();
        TraceRow {
            generation,
            best_tree_rmse: Some(b.rmse.as_f64()),
            best_forest_acc: accuracy(&preds, &truth),
            best_forest_size: 1,
        }
    };
    let mut trace = vec![row(&pop, 0)];

    for generation in 1..=cfg.generations {
        let pick = |rng: &mut ChaCha8Rng| {
            selector.select(&pop, |a, b| a.fitter_than(b), |i| i.tree.len(), rng)
        };
        let mut next = Vec::with_capacity(pop.len());
        next.push(pop[best(&pop)].clone());
        while next.len() < pop.len() {
            if rng.gen_bool(cfg.cx_prob) {
                let (a, b) = (pick(&mut rng), pick(&mut rng));
                let (x, y) = subtree_crossover(&pop[a].tree, &pop[b].tree, &mut rng);
                for (child, parent) in [(x, a), (y, b)] {
                    if next.len() < pop.len() {
                        next.push(if too_deep(&child) {
                            pop[parent].clone()
                        } else {
                            TreeIndividual::new(child, Arc::clone(&bag), ds)
                        });
                    }
                }
            } else {
                let a = pick(&mut rng);
                let child = e_mutation(&pop[a].tree, &bag.mask, cfg.mutation_depth, &mut rng);
                next.push(if too_deep(&child) {
                    pop[a].clone()
                } else {
                    TreeIndividual::new(child, Arc::clone(&bag), ds)
                });
            }
        }
        pop = next;
        let r = row(&pop, generation);
        let prev = trace.last().and_then(|p| p.best_tree_rmse).unwrap_or(f64::INFINITY);
        if r.best_tree_rmse.unwrap_or(f64::INFINITY) > prev {
            return Err(Error::Invariant(format!("best RMSE rose in generation {generation}")));
        }
        trace.push(r);
    }

    let b = &pop[best(&pop)];
    let last = trace.last().expect("trace is never empty");
    Ok(GpModel {
        tree: b.tree.clone(),
        n_features: ds.n_feat(),
        train_rmse: b.rmse.as_f64(),
        train_accuracy: last.best_forest_acc,
        split,
        trace,
    })
}
