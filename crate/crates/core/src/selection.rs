//! Tournament selection shared by the tree, forest and baseline populations.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Index of the winner of `k` uniform draws with replacement. The first
/// drawn contender keeps its place unless a later one is strictly better.
pub fn tournament<I, R: Rng + ?Sized>(
    pop: &[I],
    k: usize,
    better: impl Fn(&I, &I) -> bool,
    rng: &mut R,
) -> usize {
    assert!(!pop.is_empty(), "tournament over an empty population");
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..k.max(1) {
        let c = rng.gen_range(0..pop.len());
        if better(&pop[c], &pop[best]) {
            best = c;
        }
    }
    best
}

/// Fitness-first double tournament: two fitness tournaments pick finalists,
/// then with probability `parsimony_prob` the smaller finalist wins and
/// otherwise the fitter one. Equal sizes fall back to fitness.
pub fn double_tournament<I, R: Rng + ?Sized>(
    pop: &[I],
    k: usize,
    parsimony_prob: f64,
    better: impl Fn(&I, &I) -> bool,
    size: impl Fn(&I) -> usize,
    rng: &mut R,
) -> usize {
    let a = tournament(pop, k, &better, rng);
    let b = tournament(pop, k, &better, rng);
    let fitter = if better(&pop[b], &pop[a]) { b } else { a };
    let (sa, sb) = (size(&pop[a]), size(&pop[b]));
    if sa != sb && rng.gen_bool(parsimony_prob) {
        if sa < sb {
            a
        } else {
            b
        }
    } else {
        fitter
    }
}

/// Parent selection scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Selector {
    Tournament { k: usize },
    DoubleTournament { k: usize, parsimony_prob: f64 },
}

impl Selector {
    pub fn select<I, R: Rng + ?Sized>(
        &self,
        pop: &[I],
        better: impl Fn(&I, &I) -> bool,
        size: impl Fn(&I) -> usize,
        rng: &mut R,
    ) -> usize {
        match *self {
            Selector::Tournament { k } => tournament(pop, k, better, rng),
            Selector::DoubleTournament { k, parsimony_prob } => {
                double_tournament(pop, k, parsimony_prob, better, size, rng)
            }
        }
    }
}
