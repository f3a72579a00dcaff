//! M3GP: individuals are lists of trees ("dimensions") that map each
//! observation into a new space, classified by nearest class centroid
//! under Mahalanobis distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mahalanobis::ClassModel;
use crate::dataset::{DataSplit, Dataset, FeatureMask};
use crate::engine::TraceRow;
use crate::error::{Error, Result};
use crate::expr_tree::{
    e_mutation, grow, ramped_half_and_half, subtree_crossover, ExpressionTree, INIT_DEPTH, MUTATION_DEPTH,
};
use crate::forest::accuracy;
use crate::scalar::Scalar;
use crate::selection::double_tournament;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M3gpConfig {
    pub population: usize,
    pub generations: usize,
    pub cx_prob: f64,
    pub tournament_k: usize,
    pub parsimony_prob: f64,
    pub init_depth: (usize, usize),
    /// Depth of mutation subtrees and of freshly added dimensions.
    pub mutation_depth: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl M3gpConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            population: 500,
            generations: 100,
            cx_prob: 0.5,
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

/// Evaluates every dimension on every row: row-major `rows x dims`.
pub fn m3gp_map<T: Scalar, Row: AsRef<[T]>>(dims: &[ExpressionTree], rows: &[Row]) -> Vec<T> {
    let mut stack = Vec::new();
    let mut out = Vec::with_capacity(rows.len() * dims.len());
    for r in rows {
        for d in dims {
            out.push(d.eval_with(r.as_ref(), &mut stack));
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Individual {
    dims: Vec<ExpressionTree>,
    accuracy: f64,
}

impl Individual {
    fn nodes(&self) -> usize {
        self.dims.iter().map(ExpressionTree::len).sum()
    }
}

struct Evaluator<'a, T> {
    train_rows: Vec<&'a [T]>,
    labels: Vec<u8>,
}

impl<T: Scalar> Evaluator<'_, T> {
    fn fit(&self, dims: &[ExpressionTree]) -> (ClassModel<T>, f64) {
        let mapped = m3gp_map(dims, &self.train_rows);
        let model = ClassModel::fit(&mapped, &self.labels, dims.len());
        let acc = accuracy(&model.classify_rows(&mapped), &self.labels);
        (model, acc)
    }

    fn individual(&self, dims: Vec<ExpressionTree>) -> Individual {
        let accuracy = self.fit(&dims).1;
        Individual { dims, accuracy }
    }
}

/// Single left-to-right pass dropping dimensions whose removal does not
/// lower training accuracy; at least one dimension always remains.
fn prune<T: Scalar>(ind: &Individual, eval: &Evaluator<'_, T>) -> Individual {
    let mut cur = ind.clone();
    let mut i = 0;
    while i < cur.dims.len() && cur.dims.len() > 1 {
        let mut dims = cur.dims.clone();
        dims.remove(i);
        let cand = eval.individual(dims);
        if cand.accuracy >= cur.accuracy {
            cur = cand;
        } else {
            i += 1;
        }
    }
    cur
}

fn best(pop: &[Individual]) -> usize {
    let mut b = 0;
    for (i, ind) in pop.iter().enumerate().skip(1) {
        let cur = &pop[b];
        if ind.accuracy > cur.accuracy || (ind.accuracy == cur.accuracy && ind.nodes() < cur.nodes()) {
            b = i;
        }
    }
    b
}

#[derive(Debug, Clone)]
pub struct M3gpModel<T> {
    pub dims: Vec<ExpressionTree>,
    pub class_model: ClassModel<T>,
    pub n_features: usize,
    pub train_accuracy: f64,
    pub split: DataSplit,
    pub trace: Vec<TraceRow>,
}

impl<T: Scalar> M3gpModel<T> {
    pub fn total_nodes(&self) -> usize {
        self.dims.iter().map(ExpressionTree::len).sum()
    }

    pub fn predict<Row: AsRef<[T]>>(&self, rows: &[Row]) -> Result<Vec<u8>> {
        if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != self.n_features) {
            return Err(Error::ColumnMismatch {
                expected: self.n_features,
                found: bad.as_ref().len(),
            });
        }
        Ok(self.class_model.classify_rows(&m3gp_map(&self.dims, rows)))
    }

    pub fn accuracy_on(&self, ds: &Dataset<T>, indices: &[usize]) -> Result<f64> {
        let rows: Vec<&[T]> = indices.iter().map(|&i| ds.row(i)).collect();
        let truth: Vec<u8> = indices.iter().map(|&i| ds.label(i)).collect();
        Ok(accuracy(&self.predict(&rows)?, &truth))
    }
}

pub fn m3gp_train<T: Scalar>(ds: &Dataset<T>, cfg: &M3gpConfig) -> Result<M3gpModel<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let split = DataSplit::random(ds.n_obs(), &mut rng);
    let mask = FeatureMask::full(ds.n_feat());
    let eval = Evaluator {
        train_rows: split.train.iter().map(|&i| ds.row(i)).collect(),
        labels: split.train.iter().map(|&i| ds.label(i)).collect(),
    };
    let too_deep = |t: &ExpressionTree| cfg.max_depth.is_some_and(|d| t.depth() > d);

    let mut pop: Vec<Individual> = (0..cfg.population)
        .map(|_| eval.individual(vec![ramped_half_and_half(&mask, cfg.init_depth, &mut rng)]))
        .collect();
    let row = |pop: &[Individual], generation: usize| {
        let b = &pop[best(pop)];
        TraceRow {
            generation,
            best_tree_rmse: None,
            best_forest_acc: b.accuracy,
            best_forest_size: b.dims.len(),
        }
    };
    let mut trace = vec![row(&pop, 0)];

    for generation in 1..=cfg.generations {
        let pick = |rng: &mut ChaCha8Rng| {
            double_tournament(
                &pop,
                cfg.tournament_k,
                cfg.parsimony_prob,
                |a: &Individual, b: &Individual| a.accuracy > b.accuracy,
                Individual::nodes,
                rng,
            )
        };
        let mut next = Vec::with_capacity(pop.len());
        next.push(pop[best(&pop)].clone());
        while next.len() < pop.len() {
            if rng.gen_bool(cfg.cx_prob) {
                let (a, b) = (pick(&mut rng), pick(&mut rng));
                let (mut x, mut y) = (pop[a].dims.clone(), pop[b].dims.clone());
                let (i, j) = (rng.gen_range(0..x.len()), rng.gen_range(0..y.len()));
                if rng.gen_bool(0.5) {
                    let (cx, cy) = subtree_crossover(&x[i], &y[j], &mut rng);
                    if !too_deep(&cx) {
                        x[i] = cx;
                    }
                    if !too_deep(&cy) {
                        y[j] = cy;
                    }
                } else {
                    std::mem::swap(&mut x[i], &mut y[j]);
                }
                next.push(eval.individual(x));
                if next.len() < pop.len() {
                    next.push(eval.individual(y));
                }
            } else {
                let a = pick(&mut rng);
                let mut dims = pop[a].dims.clone();
                match rng.gen_range(0..3) {
                    0 => {
                        let i = rng.gen_range(0..dims.len());
                        let child = e_mutation(&dims[i], &mask, cfg.mutation_depth, &mut rng);
                        if !too_deep(&child) {
                            dims[i] = child;
                        }
                    }
                    1 => dims.push(grow(&mask, cfg.mutation_depth, &mut rng)),
                    _ => {
                        if dims.len() > 1 {
                            dims.remove(rng.gen_range(0..dims.len()));
                        }
                    }
                }
                next.push(eval.individual(dims));
            }
        }
        let b = best(&next);
        let pruned = prune(&next[b], &eval);
        if pruned.accuracy < next[b].accuracy {
            return Err(Error::Invariant(format!("dimension pruning lowered accuracy in generation {generation}")));
        }
        next[b] = pruned;
        pop = next;
        let r = row(&pop, generation);
        if r.best_forest_acc < trace.last().map_or(0.0, |p| p.best_forest_acc) {
            return Err(Error::Invariant(format!("best accuracy fell in generation {generation}")));
        }
        trace.push(r);
    }

    let b = &pop[best(&pop)];
    let (class_model, train_accuracy) = eval.fit(&b.dims);
    Ok(M3gpModel {
        dims: b.dims.clone(),
        class_model,
        n_features: ds.n_feat(),
        train_accuracy,
        split,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping_shape_and_locality() {
        let rows = [[1.0, 2.0], [3.0, 4.0], [5.0, -6.0]];
        let x0: ExpressionTree = "x0".parse().unwrap();
        assert_eq!(m3gp_map(std::slice::from_ref(&x0), &rows), vec![1.0, 3.0, 5.0]);
        let two = vec![x0.clone(), "(+ x0 x1)".parse().unwrap()];
        let m = m3gp_map(&two, &rows);
        assert_eq!(m.len(), 6);
        assert_eq!(m, vec![1.0, 3.0, 3.0, 7.0, 5.0, -1.0]);
        let mut three = two.clone();
        three.push("(sqrt x1)".parse().unwrap());
        let m3 = m3gp_map(&three, &rows);
        for r in 0..3 {
            assert_eq!(&m3[r * 3..r * 3 + 2], &m[r * 2..r * 2 + 2]);
        }
        assert_eq!(m3[8], -6.0);
    }

    #[test]
    fn zero_generations_is_one_dimensional() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let labels = rows.iter().map(|r| u8::from(r[0] > 0.5)).collect();
        let ds = Dataset::new(rows, labels, None).unwrap();
        let cfg = M3gpConfig {
            population: 20,
            generations: 0,
            ..M3gpConfig::new(2)
        };
        let m = m3gp_train(&ds, &cfg).unwrap();
        assert_eq!(m.dims.len(), 1);
        assert_eq!(m.accuracy_on(&ds, &m.split.train).unwrap(), m.train_accuracy);
    }
}
