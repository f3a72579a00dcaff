//! Forests: ensembles of archived trees, their voting rules, accuracy
//! fitness and the add/remove/swap operators.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scalar::Scalar;
use crate::selection::tournament;
use crate::tree_pop::{TreeArchive, TreeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VotingMode {
    /// Majority vote, ties broken at random.
    Normal,
    /// Certainty-weighted vote, ties go to class 0.
    Weighted,
}

impl fmt::Display for VotingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VotingMode::Normal => "normal",
            VotingMode::Weighted => "weighted",
        })
    }
}

impl FromStr for VotingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "n" => Ok(VotingMode::Normal),
            "weighted" | "w" => Ok(VotingMode::Weighted),
            _ => Err(Error::Config(format!("unknown voting mode '{s}'"))),
        }
    }
}

/// Class whose label is nearest to `output`; the 0.5 midpoint votes 0.
#[inline]
pub fn nearest_label<T: Scalar>(output: T) -> u8 {
    u8::from(output > T::of(0.5))
}

/// Per-observation class votes of each member, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteMatrix {
    n_rows: usize,
    n_members: usize,
    votes: Vec<u8>,
}

impl VoteMatrix {
    /// From member outputs, one slice per member over the same rows.
    pub fn from_outputs<T: Scalar>(outputs: &[&[T]]) -> Self {
        let n_members = outputs.len();
        let n_rows = outputs.first().map_or(0, |o| o.len());
        let mut votes = Vec::with_capacity(n_rows * n_members);
        for r in 0..n_rows {
            votes.extend(outputs.iter().map(|o| nearest_label(o[r])));
        }
        Self {
            n_rows,
            n_members,
            votes,
        }
    }

    pub fn from_rows(rows: Vec<Vec<u8>>) -> Self {
        let n_members = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_members), "ragged vote matrix");
        Self {
            n_rows: rows.len(),
            n_members,
            votes: rows.concat(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_members(&self) -> usize {
        self.n_members
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.votes[r * self.n_members..(r + 1) * self.n_members]
    }
}

/// Majority over each row's votes; an exact tie draws a label uniformly.
pub fn majority_vote<R: Rng + ?Sized>(votes: &VoteMatrix, rng: &mut R) -> Vec<u8> {
    (0..votes.n_rows())
        .map(|r| {
            let ones = votes.row(r).iter().filter(|&&v| v == 1).count();
            let zeros = votes.n_members() - ones;
            match ones.cmp(&zeros) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Equal => u8::from(rng.gen_bool(0.5)),
            }
        })
        .collect()
}

/// Certainty of each member's vote on one observation: with residuals
/// `r_k = |prediction_k - vote_k|`, `cert_k = 1 - r_k / ||r||_2`. A zero
/// residual vector gives certainty 1 everywhere.
pub fn certainty_row<T: Scalar>(predictions: &[T], votes: &[u8]) -> Vec<T> {
    let residuals: Vec<T> = predictions
        .iter()
        .zip(votes)
        .map(|(&p, &v)| (p - T::of(f64::from(v))).abs())
        .collect();
    let largest = residuals.iter().fold(T::zero(), |m, &r| m.max(r));
    if largest == T::zero() {
        return vec![T::one(); residuals.len()];
    }
    // scale by the largest residual so the norm cannot overflow
    let scaled: Vec<T> = residuals.iter().map(|&r| r / largest).collect();
    let norm = scaled.iter().fold(T::zero(), |acc, &s| acc + s * s).sqrt();
    scaled
        .iter()
        .map(|&s| (T::one() - s / norm).max(T::zero()).min(T::one()))
        .collect()
}

/// Per-observation member certainties, row-major like [`VoteMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct CertaintyMatrix<T> {
    n_members: usize,
    cert: Vec<T>,
}

impl<T: Scalar> CertaintyMatrix<T> {
    pub fn from_outputs(outputs: &[&[T]], votes: &VoteMatrix) -> Self {
        let mut cert = Vec::with_capacity(votes.n_rows() * votes.n_members());
        let mut preds = Vec::with_capacity(outputs.len());
        for r in 0..votes.n_rows() {
            preds.clear();
            preds.extend(outputs.iter().map(|o| o[r]));
            cert.extend(certainty_row(&preds, votes.row(r)));
        }
        Self {
            n_members: votes.n_members(),
            cert,
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let n_members = rows.first().map_or(0, Vec::len);
        Self {
            n_members,
            cert: rows.concat(),
        }
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.cert[r * self.n_members..(r + 1) * self.n_members]
    }
}

/// Certainty-weighted vote: class 0 unless the certainty mass voting 1
/// strictly exceeds the mass voting 0.
pub fn weighted_vote<T: Scalar>(votes: &VoteMatrix, cert: &CertaintyMatrix<T>) -> Vec<u8> {
    (0..votes.n_rows())
        .map(|r| {
            let (mut zeros, mut ones) = (T::zero(), T::zero());
            for (&v, &c) in votes.row(r).iter().zip(cert.row(r)) {
                if v == 1 {
                    ones = ones + c;
                } else {
                    zeros = zeros + c;
                }
            }
            let total = zeros + ones;
            if total == T::zero() || zeros / total >= ones / total {
                0
            } else {
                1
            }
        })
        .collect()
}

/// Ensemble labels from member outputs (one slice per member, same rows).
pub fn ensemble_predict<T: Scalar, R: Rng + ?Sized>(outputs: &[&[T]], mode: VotingMode, rng: &mut R) -> Vec<u8> {
    let votes = VoteMatrix::from_outputs(outputs);
    match mode {
        VotingMode::Normal => majority_vote(&votes, rng),
        VotingMode::Weighted => weighted_vote(&votes, &CertaintyMatrix::from_outputs(outputs, &votes)),
    }
}

/// Fraction of positions where `predicted` equals `truth`.
pub fn accuracy(predicted: &[u8], truth: &[u8]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// An ensemble of archived trees with its cached training accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub members: Vec<TreeId>,
    pub accuracy: f64,
}

impl Forest {
    pub fn total_nodes<T: Scalar>(&self, archive: &TreeArchive<T>) -> usize {
        self.members.iter().map(|&id| archive.individual(id).tree.len()).sum()
    }
}

/// Scores member lists on the archive's training rows. Every evaluation
/// restarts the tie-breaking stream from `tie_seed`, so the score is a pure
/// function of the member list.
#[derive(Debug, Clone)]
pub struct ForestScorer<'a, T> {
    pub archive: &'a TreeArchive<T>,
    /// True labels of the archive's training rows, in the same order.
    pub labels: &'a [u8],
    pub mode: VotingMode,
    pub tie_seed: u64,
}

impl<T: Scalar> ForestScorer<'_, T> {
    pub fn predict(&self, members: &[TreeId]) -> Vec<u8> {
        let outputs: Vec<&[T]> = members
            .iter()
            .map(|&id| &*self.archive.entry(id).train_outputs)
            .collect();
        ensemble_predict(&outputs, self.mode, &mut ChaCha8Rng::seed_from_u64(self.tie_seed))
    }

    pub fn score(&self, members: &[TreeId]) -> f64 {
        accuracy(&self.predict(members), self.labels)
    }

    pub fn forest(&self, members: Vec<TreeId>) -> Forest {
        let accuracy = self.score(&members);
        Forest { members, accuracy }
    }
}

/// Training accuracy of `forest`, drawing tie breaks from `rng`.
pub fn accuracy_fitness<T: Scalar, R: Rng + ?Sized>(
    forest: &Forest,
    archive: &TreeArchive<T>,
    labels: &[u8],
    mode: VotingMode,
    rng: &mut R,
) -> f64 {
    let outputs: Vec<&[T]> = forest
        .members
        .iter()
        .map(|&id| &*archive.entry(id).train_outputs)
        .collect();
    accuracy(&ensemble_predict(&outputs, mode, rng), labels)
}

/// Appends a uniformly chosen tree from `live`.
pub fn mutation_add<R: Rng + ?Sized>(members: &[TreeId], live: &[TreeId], rng: &mut R) -> Vec<TreeId> {
    let mut out = members.to_vec();
    out.push(live[rng.gen_range(0..live.len())]);
    out
}

/// Removes a uniformly chosen member; a singleton is returned unchanged.
pub fn mutation_remove<R: Rng + ?Sized>(members: &[TreeId], rng: &mut R) -> Vec<TreeId> {
    let mut out = members.to_vec();
    if out.len() > 1 {
        out.remove(rng.gen_range(0..out.len()));
    }
    out
}

/// Exchanges one uniformly chosen member between two ensembles, in place of each other.
pub fn crossover_swap<R: Rng + ?Sized>(a: &[TreeId], b: &[TreeId], rng: &mut R) -> (Vec<TreeId>, Vec<TreeId>) {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    let i = rng.gen_range(0..a.len());
    let j = rng.gen_range(0..b.len());
    std::mem::swap(&mut a[i], &mut b[j]);
    (a, b)
}

/// Single left-to-right pass removing each member whose absence does not
/// lower the score. The last member is never removed.
pub fn prune(forest: &Forest, score: impl Fn(&[TreeId]) -> f64) -> Forest {
    let mut members = forest.members.clone();
    let mut best = forest.accuracy;
    let mut i = 0;
    while i < members.len() && members.len() > 1 {
        let mut candidate = members.clone();
        candidate.remove(i);
        let acc = score(&candidate);
        if acc >= best {
            members = candidate;
            best = acc;
        } else {
            i += 1;
        }
    }
    Forest {
        members,
        accuracy: best,
    }
}

pub fn prune_best<T: Scalar>(forest: &Forest, scorer: &ForestScorer<'_, T>) -> Forest {
    prune(forest, |m| scorer.score(m))
}

/// Index of the best forest: highest accuracy, then fewest total nodes,
/// then earliest position.
pub fn best_forest<T: Scalar>(forests: &[Forest], archive: &TreeArchive<T>) -> usize {
    let mut best = 0;
    let mut best_nodes = forests[0].total_nodes(archive);
    for (i, f) in forests.iter().enumerate().skip(1) {
        let nodes = f.total_nodes(archive);
        if f.accuracy > forests[best].accuracy || (f.accuracy == forests[best].accuracy && nodes < best_nodes) {
            best = i;
            best_nodes = nodes;
        }
    }
    best
}

/// Parameters for breeding the forest subpopulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestBreedParams {
    pub cx_prob: f64,
    pub tournament_k: usize,
}

/// Outcome of a pruning step, for monitoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneRecord {
    pub accuracy_before: f64,
    pub accuracy_after: f64,
    pub size_before: usize,
    pub size_after: usize,
}

/// Produces the next forest generation: the best forest carried over, the
/// rest bred from tournament winners by swap crossover or add/remove
/// mutation; finally the best offspring is pruned in place.
pub fn breed_forests<T: Scalar, R: Rng + ?Sized>(
    forests: &[Forest],
    scorer: &ForestScorer<'_, T>,
    params: &ForestBreedParams,
    rng: &mut R,
) -> (Vec<Forest>, PruneRecord) {
    let archive = scorer.archive;
    let size = forests.len();
    let pick = |rng: &mut R| tournament(forests, params.tournament_k, |a, b| a.accuracy > b.accuracy, rng);

    let mut next = Vec::with_capacity(size);
    next.push(forests[best_forest(forests, archive)].clone());
    while next.len() < size {
        if rng.gen_bool(params.cx_prob) {
            let (a, b) = (pick(rng), pick(rng));
            let (x, y) = crossover_swap(&forests[a].members, &forests[b].members, rng);
            next.push(scorer.forest(x));
            if next.len() < size {
                next.push(scorer.forest(y));
            }
        } else {
            let a = pick(rng);
            let members = if rng.gen_bool(0.5) {
                mutation_add(&forests[a].members, archive.live(), rng)
            } else {
                mutation_remove(&forests[a].members, rng)
            };
            next.push(scorer.forest(members));
        }
    }

    let b = best_forest(&next, archive);
    let before = next[b].clone();
    let pruned = prune_best(&before, scorer);
    let record = PruneRecord {
        accuracy_before: before.accuracy,
        accuracy_after: pruned.accuracy,
        size_before: before.members.len(),
        size_after: pruned.members.len(),
    };
    next[b] = pruned;
    (next, record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn member_votes_use_nearest_label() {
        assert_eq!(nearest_label(0.9), 1);
        assert_eq!(nearest_label(-3.0), 0);
        assert_eq!(nearest_label(0.5), 0);
        assert_eq!(nearest_label(0.500001f32), 1);
        assert_eq!(nearest_label(f64::MAX), 1);
        let a = [0.9, -3.0];
        let b = [0.5, 7.0];
        let v = VoteMatrix::from_outputs::<f64>(&[&a, &b]);
        assert_eq!((v.row(0), v.row(1)), (&[1u8, 0][..], &[0u8, 1][..]));
    }

    #[test]
    fn majority_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = VoteMatrix::from_rows(vec![vec![1, 1, 0], vec![0, 0, 1]]);
        assert_eq!(majority_vote(&v, &mut rng), vec![1, 0]);
        let single = VoteMatrix::from_rows(vec![vec![0], vec![1]]);
        assert_eq!(majority_vote(&single, &mut rng), vec![0, 1]);
        let tie = VoteMatrix::from_rows(vec![vec![1, 0]; 20_000]);
        let ones = majority_vote(&tie, &mut rng).iter().filter(|&&l| l == 1).count();
        assert!((ones as f64 / 20_000.0 - 0.5).abs() < 0.015);
    }

    #[test]
    fn certainty_examples() {
        assert_eq!(certainty_row(&[1.0, 0.0, 1.0], &[1, 0, 1]), vec![1.0; 3]);
        for n in 1..10 {
            let preds = vec![0.8; n];
            let c = certainty_row(&preds, &vec![1; n]);
            for v in c {
                assert!((v - (1.0 - 1.0 / (n as f64).sqrt())).abs() < 1e-12);
            }
        }
        assert_eq!(certainty_row(&[3.0], &[1]), vec![0.0]);
        // 3-4-5 triangle: residuals 0.3, 0.4 -> 1 - 0.6, 1 - 0.8
        let c = certainty_row(&[0.7f64, 0.4], &[1, 0]);
        assert!((c[0] - 0.4).abs() < 1e-12 && (c[1] - 0.2).abs() < 1e-12);
        let c = certainty_row(&[f64::MAX, 0.0, 1.0], &[1, 0, 1]);
        assert_eq!(c, vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn weighted_examples() {
        let v = VoteMatrix::from_rows(vec![vec![1, 0], vec![1, 0], vec![0, 0], vec![1, 1]]);
        let c = CertaintyMatrix::from_rows(vec![vec![0.9, 0.1], vec![0.4, 0.4], vec![0.0, 0.0], vec![0.2, 0.1]]);
        assert_eq!(weighted_vote(&v, &c), vec![1, 0, 0, 1]);
    }

    #[test]
    fn accuracy_counts() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]), 1.0);
        assert_eq!(accuracy(&[0, 1, 0], &[1, 0, 1]), 0.0);
        let truth = vec![1u8; 478];
        let mut pred = vec![1u8; 478];
        pred[..48].fill(0);
        assert!((accuracy(&pred, &truth) - 430.0 / 478.0).abs() < 1e-15);
        assert!((accuracy(&pred, &truth) - 0.8996).abs() < 5e-5);
    }

    #[test]
    fn operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(mutation_add(&[4], &[7, 8], &mut rng).len(), 2);
        assert_eq!(mutation_remove(&[4], &mut rng), vec![4]);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..200 {
            seen.insert(crossover_swap(&[1, 2], &[3], &mut rng));
        }
        let expected: std::collections::BTreeSet<_> = [(vec![3, 2], vec![1]), (vec![1, 3], vec![2])].into();
        assert_eq!(seen, expected);
        for _ in 0..50 {
            let r = mutation_remove(&[1, 2, 3], &mut rng);
            assert_eq!(r.len(), 2);
        }
    }

    #[test]
    fn prune_cases() {
        // member outputs as votes against labels [1,1,0,0]
        let outs: Vec<[u8; 4]> = vec![[1, 1, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0], [1, 1, 0, 1]];
        let labels = [1u8, 1, 0, 0];
        let score = |m: &[TreeId]| {
            let v = VoteMatrix::from_rows(
                (0..4).map(|r| m.iter().map(|&id| outs[id as usize][r]).collect()).collect(),
            );
            accuracy(&majority_vote(&v, &mut ChaCha8Rng::seed_from_u64(3)), &labels)
        };
        let single = Forest {
            members: vec![2],
            accuracy: score(&[2]),
        };
        assert_eq!(prune(&single, score), single);
        // duplicated member 0: one copy is redundant
        let dup = Forest {
            members: vec![0, 0, 1, 2],
            accuracy: score(&[0, 0, 1, 2]),
        };
        let p = prune(&dup, score);
        assert!(p.accuracy >= dup.accuracy);
        assert!(p.members.len() < 4);
        assert_eq!(p.accuracy, score(&p.members));
    }

    #[test]
    fn prune_keeps_necessary_members() {
        // three members each right on a different pair of rows; majority is
        // perfect, any two leave a 1-1 tie that weighted voting sends to 0
        let outs: Vec<[f64; 3]> = vec![[1.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]];
        let labels = [1u8, 1, 1];
        let score = |m: &[TreeId]| {
            let o: Vec<&[f64]> = m.iter().map(|&id| &outs[id as usize][..]).collect();
            accuracy(&ensemble_predict(&o, VotingMode::Weighted, &mut ChaCha8Rng::seed_from_u64(0)), &labels)
        };
        let f = Forest {
            members: vec![0, 1, 2],
            accuracy: score(&[0, 1, 2]),
        };
        assert_eq!(f.accuracy, 1.0);
        // brute-force leave-one-out confirms every member is needed
        for i in 0..3 {
            let mut m = f.members.clone();
            m.remove(i);
            assert!(score(&m) < f.accuracy);
        }
        assert_eq!(prune(&f, score), f);
    }
}
