//! The tree subpopulation: bag-restricted RMSE fitness, breeding with
//! feature-protected operators, and an archive that keeps trees alive while
//! any forest still refers to them.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rand::Rng;

use crate::dataset::{Bag, Dataset, FeatureSimilarity};
use crate::expr_tree::{e_crossover, e_mutation, ExpressionTree};
use crate::scalar::Scalar;
use crate::selection::Selector;

pub type TreeId = u64;

/// Root mean squared error of the tree against the 0/1 labels on the bag's
/// observations only.
pub fn rmse_fitness<T: Scalar>(tree: &ExpressionTree, bag: &Bag, ds: &Dataset<T>) -> T {
    let mut stack = Vec::with_capacity(tree.len());
    let sum = bag.obs.iter().fold(T::zero(), |acc, &i| {
        let err = tree.eval_with(ds.row(i), &mut stack) - T::of(f64::from(ds.label(i)));
        acc + err * err
    });
    (sum / T::of(bag.obs.len() as f64)).sqrt().saturate()
}

#[derive(Debug, Clone)]
pub struct TreeIndividual<T> {
    pub tree: ExpressionTree,
    pub bag: Arc<Bag>,
    pub rmse: T,
}

impl<T: Scalar> TreeIndividual<T> {
    pub fn new(tree: ExpressionTree, bag: Arc<Bag>, ds: &Dataset<T>) -> Self {
        let rmse = rmse_fitness(&tree, &bag, ds);
        Self { tree, bag, rmse }
    }

    pub fn fitter_than(&self, other: &Self) -> bool {
        self.rmse < other.rmse
    }
}

#[derive(Debug, Clone)]
pub struct ArchiveEntry<T> {
    pub individual: TreeIndividual<T>,
    /// Tree outputs on the archive's training rows, in split order.
    pub train_outputs: Arc<[T]>,
}

/// Append-only id space over tree individuals plus the current generation.
#[derive(Debug, Clone)]
pub struct TreeArchive<T> {
    entries: BTreeMap<TreeId, ArchiveEntry<T>>,
    live: Vec<TreeId>,
    next_id: TreeId,
    train_rows: Vec<usize>,
}

impl<T: Scalar> TreeArchive<T> {
    pub fn new(train_rows: Vec<usize>) -> Self {
        Self {
            entries: BTreeMap::new(),
            live: Vec::new(),
            next_id: 0,
            train_rows,
        }
    }

    /// Stores a new individual under a fresh id. Does not make it live.
    pub fn insert(&mut self, individual: TreeIndividual<T>, ds: &Dataset<T>) -> TreeId {
        let outputs = individual.tree.eval_rows(ds, &self.train_rows);
        let id = self.next_id;
        self.next_id += 1;
        self.entries.insert(
            id,
            ArchiveEntry {
                individual,
                train_outputs: outputs.into(),
            },
        );
        id
    }

    pub fn get(&self, id: TreeId) -> Option<&ArchiveEntry<T>> {
        self.entries.get(&id)
    }

    /// Panics if `id` was collected.
    pub fn entry(&self, id: TreeId) -> &ArchiveEntry<T> {
        &self.entries[&id]
    }

    pub fn individual(&self, id: TreeId) -> &TreeIndividual<T> {
        &self.entry(id).individual
    }

    pub fn live(&self) -> &[TreeId] {
        &self.live
    }

    pub fn set_live(&mut self, ids: Vec<TreeId>) {
        debug_assert!(ids.iter().all(|id| self.entries.contains_key(id)));
        self.live = ids;
    }

    pub fn train_rows(&self) -> &[usize] {
        &self.train_rows
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Live tree with the lowest RMSE; ties go to the earlier position.
    pub fn best_live(&self) -> TreeId {
        let mut best = self.live[0];
        for &id in &self.live[1..] {
            if self.individual(id).fitter_than(self.individual(best)) {
                best = id;
            }
        }
        best
    }

    /// Drops every entry that is neither live nor listed in `referenced`.
    pub fn collect_garbage(&mut self, referenced: impl IntoIterator<Item = TreeId>) {
        let mut keep: HashSet<TreeId> = referenced.into_iter().collect();
        keep.extend(self.live.iter().copied());
        self.entries.retain(|id, _| keep.contains(id));
    }
}

/// Breeding parameters for one tree subpopulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreedParams {
    pub cx_prob: f64,
    pub selector: Selector,
    pub mutation_depth: usize,
    /// Offspring deeper than this are replaced by their parent.
    pub max_depth: Option<usize>,
}

/// Counters from one breeding step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BreedStats {
    pub crossovers: usize,
    pub mutations: usize,
    pub terminal_repairs: usize,
}

/// Replaces the live generation: the best live tree is carried over under
/// its own id, the rest are offspring of selected parents. Offspring keep
/// the bag of the parent that supplied their root.
pub fn breed_generation<T: Scalar, R: Rng + ?Sized>(
    archive: &mut TreeArchive<T>,
    ds: &Dataset<T>,
    sim: &FeatureSimilarity<T>,
    params: &BreedParams,
    rng: &mut R,
) -> BreedStats {
    let size = archive.live().len();
    let parents: Vec<TreeId> = archive.live().to_vec();
    let pool: Vec<&TreeIndividual<T>> = parents.iter().map(|&id| archive.individual(id)).collect();
    let pick = |rng: &mut R| {
        params
            .selector
            .select(&pool, |a, b| a.fitter_than(b), |i| i.tree.len(), rng)
    };
    let too_deep = |t: &ExpressionTree| params.max_depth.is_some_and(|d| t.depth() > d);

    let mut stats = BreedStats::default();
    // (offspring, or None to carry the parent's id)
    let mut planned: Vec<(usize, Option<ExpressionTree>)> = Vec::with_capacity(size);
    let elite = parents.iter().position(|&id| id == archive.best_live()).expect("elite is live");
    planned.push((elite, None));
    while planned.len() < size {
        if rng.gen_bool(params.cx_prob) {
            let (a, b) = (pick(rng), pick(rng));
            let (pa, pb) = (pool[a], pool[b]);
            let out = e_crossover((&pa.tree, &pa.bag.mask), (&pb.tree, &pb.bag.mask), sim, rng);
            stats.crossovers += 1;
            stats.terminal_repairs += out.repairs;
            planned.push((a, (!too_deep(&out.first)).then_some(out.first)));
            if planned.len() < size {
                planned.push((b, (!too_deep(&out.second)).then_some(out.second)));
            }
        } else {
            let a = pick(rng);
            let p = pool[a];
            let child = e_mutation(&p.tree, &p.bag.mask, params.mutation_depth, rng);
            stats.mutations += 1;
            planned.push((a, (!too_deep(&child)).then_some(child)));
        }
    }
    drop(pool);

    let mut next = Vec::with_capacity(size);
    for (parent, child) in planned {
        let id = match child {
            None => parents[parent],
            Some(tree) => {
                let bag = Arc::clone(&archive.individual(parents[parent]).bag);
                let ind = TreeIndividual::new(tree, bag, ds);
                archive.insert(ind, ds)
            }
        };
        next.push(id);
    }
    archive.set_live(next);
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{sample_bag, DataSplit, FeatureMask, SamplingMode};
    use crate::expr_tree::{ramped_half_and_half, INIT_DEPTH, MUTATION_DEPTH};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data() -> Dataset<f64> {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.5], vec![0.0, 2.0], vec![1.0, 3.0]];
        Dataset::new(rows, vec![0, 1, 0, 1], None).unwrap()
    }

    fn bag(obs: Vec<usize>) -> Bag {
        Bag {
            obs,
            mask: FeatureMask::full(2),
        }
    }

    #[test]
    fn rmse_examples() {
        let ds = data();
        let x0: ExpressionTree = "x0".parse().unwrap();
        assert_eq!(rmse_fitness(&x0, &bag(vec![0, 1, 2, 3]), &ds), 0.0);
        // x1/(x1+x1) = 0.5 everywhere
        let half: ExpressionTree = "(/ x1 (+ x1 x1))".parse().unwrap();
        assert!((rmse_fitness(&half, &bag(vec![0, 1, 2, 3]), &ds) - 0.5).abs() < 1e-15);
        // row 2 has x1 = 2, label 0
        let x1: ExpressionTree = "x1".parse().unwrap();
        assert_eq!(rmse_fitness(&x1, &bag(vec![2]), &ds), 2.0);
        // row 3: output 3 vs label 1, bag restricts to it alone
        assert_eq!(rmse_fitness(&x1, &bag(vec![3]), &ds), 2.0);
        let one: ExpressionTree = "(/ x1 x1)".parse().unwrap();
        assert_eq!(rmse_fitness(&(("(+ x0 x0)").parse().unwrap()), &bag(vec![1]), &ds), 1.0);
        assert_eq!(rmse_fitness(&one, &bag(vec![1]), &ds), 0.0);
    }

    fn setup(seed: u64, n: usize, mode: SamplingMode) -> (Dataset<f64>, TreeArchive<f64>, FeatureSimilarity<f64>, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let labels = rows.iter().map(|r| u8::from(r[0] + r[3] > 0.0)).collect();
        let ds = Dataset::new(rows, labels, None).unwrap();
        let split = DataSplit::random(ds.n_obs(), &mut rng);
        let sim = FeatureSimilarity::compute(&ds, &split);
        let mut archive = TreeArchive::new(split.train.clone());
        let mut live = Vec::new();
        for _ in 0..n {
            let bag = Arc::new(sample_bag(&split, ds.n_feat(), mode, &mut rng));
            let tree = ramped_half_and_half(&bag.mask, INIT_DEPTH, &mut rng);
            live.push(archive.insert(TreeIndividual::new(tree, bag, &ds), &ds));
        }
        archive.set_live(live);
        (ds, archive, sim, rng)
    }

    fn params(cx_prob: f64) -> BreedParams {
        BreedParams {
            cx_prob,
            selector: Selector::Tournament { k: 5 },
            mutation_depth: MUTATION_DEPTH,
            max_depth: None,
        }
    }

    #[test]
    fn breeding_preserves_size_elite_and_bags() {
        let (ds, mut archive, sim, mut rng) = setup(1, 40, SamplingMode::RandomObsFeat);
        let mut best = archive.individual(archive.best_live()).rmse;
        for _ in 0..15 {
            let old_bags: Vec<Arc<Bag>> = archive
                .live()
                .iter()
                .map(|&id| Arc::clone(&archive.individual(id).bag))
                .collect();
            let elite = archive.best_live();
            breed_generation(&mut archive, &ds, &sim, &params(0.5), &mut rng);
            assert_eq!(archive.live().len(), 40);
            assert_eq!(archive.live()[0], elite);
            let now = archive.individual(archive.best_live()).rmse;
            assert!(now <= best);
            best = now;
            for &id in archive.live() {
                let ind = archive.individual(id);
                assert!(old_bags.iter().any(|b| Arc::ptr_eq(b, &ind.bag)));
                assert!(ind.tree.respects(&ind.bag.mask));
                assert_eq!(ind.rmse, rmse_fitness(&ind.tree, &ind.bag, &ds));
            }
        }
    }

    #[test]
    fn zero_crossover_probability_only_mutates() {
        let (ds, mut archive, sim, mut rng) = setup(2, 20, SamplingMode::FixedObs);
        let stats = breed_generation(&mut archive, &ds, &sim, &params(0.0), &mut rng);
        assert_eq!((stats.crossovers, stats.mutations), (0, 19));
        assert_eq!(stats.terminal_repairs, 0);
    }

    #[test]
    fn full_masks_need_no_repair() {
        let (ds, mut archive, sim, mut rng) = setup(3, 30, SamplingMode::FixedObs);
        for _ in 0..10 {
            let stats = breed_generation(&mut archive, &ds, &sim, &params(1.0), &mut rng);
            assert_eq!(stats.terminal_repairs, 0);
        }
    }

    #[test]
    fn archive_ids_and_garbage_collection() {
        let (ds, mut archive, sim, mut rng) = setup(4, 10, SamplingMode::FixedObs);
        let kept = archive.live()[3];
        let before: Vec<TreeId> = archive.live().to_vec();
        breed_generation(&mut archive, &ds, &sim, &params(0.5), &mut rng);
        assert!(archive.live().iter().all(|id| archive.get(*id).is_some()));
        let fresh: Vec<TreeId> = archive.live().iter().copied().filter(|id| !before.contains(id)).collect();
        assert!(fresh.iter().all(|&id| id >= 10));
        archive.collect_garbage([kept]);
        assert!(archive.get(kept).is_some());
        for id in before {
            if id != kept && !archive.live().contains(&id) {
                assert!(archive.get(id).is_none());
            }
        }
        let outputs = &archive.entry(kept).train_outputs;
        assert_eq!(outputs.len(), archive.train_rows().len());
    }

    #[test]
    fn depth_cap_keeps_parents() {
        let (ds, mut archive, sim, mut rng) = setup(5, 20, SamplingMode::FixedObs);
        let mut p = params(0.5);
        p.max_depth = Some(6);
        for _ in 0..10 {
            breed_generation(&mut archive, &ds, &sim, &p, &mut rng);
            assert!(archive.live().iter().all(|&id| archive.individual(id).tree.depth() <= 6));
        }
    }
}
