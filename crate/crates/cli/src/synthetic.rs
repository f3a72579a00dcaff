//! A generated stand-in for small tabular binary problems: two Gaussian
//! classes whose separation is spread unevenly over the features.

use egp_core::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Fraction of observations in class 1.
pub const POSITIVE_FRACTION: f64 = 0.35;

/// `n` rows, `n_feat` features. Class 0 is standard normal; class 1 is
/// shifted by a decreasing amount per feature and has a wider spread.
pub fn two_gaussians(n: usize, n_feat: usize, seed: u64) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let narrow = Normal::new(0.0, 1.0).expect("valid normal");
    let wide = Normal::new(0.0, 1.5).expect("valid normal");
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let positive = rng.gen_bool(POSITIVE_FRACTION);
        let row = (0..n_feat)
            .map(|j| {
                if positive {
                    shift(j, n_feat) + wide.sample(&mut rng)
                } else {
                    narrow.sample(&mut rng)
                }
            })
            .collect();
        rows.push(row);
        labels.push(u8::from(positive));
    }
    let names = (0..n_feat).map(|j| format!("x{j}")).collect();
    Dataset::new(rows, labels, Some(names)).expect("generated data is well formed")
}

/// Per-feature (mean, sd) for class 0 and class 1, on the 1-10 scale of
/// cytology scores: class 0 low and tight, class 1 high and spread out.
const CYTOLOGY_PROFILE: [((f64, f64), (f64, f64)); 10] = [
    ((3.0, 1.7), (7.2, 2.4)),
    ((1.3, 0.9), (6.6, 2.7)),
    ((1.4, 1.0), (6.6, 2.6)),
    ((1.4, 1.0), (5.6, 3.2)),
    ((2.1, 0.9), (5.3, 2.5)),
    ((1.3, 1.2), (7.6, 3.1)),
    ((2.1, 1.1), (6.0, 2.3)),
    ((1.3, 1.1), (5.9, 3.4)),
    ((1.1, 0.5), (2.6, 2.6)),
    ((1.5, 1.0), (3.0, 2.5)),
];

/// A two-Gaussian stand-in for a 10-feature cytology table (benign vs.
/// malignant). Each feature has its own class-conditional mean and spread.
pub fn cytology_like(n: usize, seed: u64) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let positive = rng.gen_bool(POSITIVE_FRACTION);
        let row = CYTOLOGY_PROFILE
            .iter()
            .map(|&(neg, pos)| {
                let (mean, sd) = if positive { pos } else { neg };
                Normal::new(mean, sd).expect("valid normal").sample(&mut rng)
            })
            .collect();
        rows.push(row);
        labels.push(u8::from(positive));
    }
    let names = (0..CYTOLOGY_PROFILE.len()).map(|j| format!("x{j}")).collect();
    Dataset::new(rows, labels, Some(names)).expect("generated data is well formed")
}

fn shift(j: usize, n_feat: usize) -> f64 {
    1.5 * (1.0 - j as f64 / n_feat as f64)
}
