//! Kruskal-Wallis rank test and the pairwise "significantly better" tally
//! used to compare methods across datasets.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Significance level used for method comparisons.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Named groups of observations, e.g. the test accuracies of each method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub names: Vec<String>,
    pub groups: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KwResult {
    /// Tie-corrected statistic.
    pub h: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Ranks starting at 1, tied values sharing the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j share rank (i + 1 + j) / 2
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(df as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
    }
}

/// Kruskal-Wallis H test with tie correction, p-value from the chi-square
/// approximation with `groups - 1` degrees of freedom.
pub fn kruskal_wallis<G: AsRef<[f64]>>(groups: &[G]) -> Result<KwResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::Samples("at least two groups are required".into()));
    }
    if groups.iter().any(|g| g.as_ref().is_empty()) {
        return Err(Error::Samples("every group needs at least one observation".into()));
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::Samples("observations must be finite".into()));
    }
    let n = pooled.len();
    if n < 3 {
        return Err(Error::Samples("at least three observations are required".into()));
    }
    let df = k - 1;
    let ranks = midranks(&pooled);

    let nf = n as f64;
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let len = g.as_ref().len();
        let r: f64 = ranks[offset..offset + len].iter().sum();
        sum += r * r / len as f64;
        offset += len;
    }
    let h_raw = 12.0 / (nf * (nf + 1.0)) * sum - 3.0 * (nf + 1.0);

    let mut sorted = pooled;
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < n {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        let t = j as f64;
        ties += t * t * t - t;
        i += j;
    }
    let correction = 1.0 - ties / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Ok(KwResult {
            h: 0.0,
            df,
            p_value: 1.0,
        });
    }
    let h = (h_raw / correction).max(0.0);
    Ok(KwResult {
        h,
        df,
        p_value: chi_square_sf(h, df),
    })
}

impl SampleSet {
    pub fn kruskal_wallis(&self) -> Result<KwResult> {
        kruskal_wallis(&self.groups)
    }
}

/// Median of a non-empty sample.
pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Quantile by linear interpolation between order statistics.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!(!xs.is_empty(), "quantile of an empty sample");
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

/// Whether `a` is significantly better than `b`: two-group Kruskal-Wallis
/// below `alpha` and a strictly higher median.
pub fn significantly_better(a: &[f64], b: &[f64], alpha: f64) -> bool {
    match kruskal_wallis(&[a, b]) {
        Ok(r) => r.p_value < alpha && median(a) > median(b),
        Err(_) => false,
    }
}

/// For each method, the number of (dataset, other method) pairs it beats
/// significantly. `datasets[d][m]` holds method `m`'s samples on dataset `d`;
/// every dataset must list the same methods in the same order.
pub fn pairwise_significance_counts(datasets: &[Vec<Vec<f64>>], alpha: f64) -> Result<Vec<usize>> {
    let n_methods = datasets.first().map_or(0, Vec::len);
    if n_methods < 2 {
        return Err(Error::Samples("at least two methods are required".into()));
    }
    if datasets.iter().any(|d| d.len() != n_methods) {
        return Err(Error::Samples("every dataset must list every method".into()));
    }
    let mut counts = vec![0; n_methods];
    for d in datasets {
        for a in 0..n_methods {
            for b in 0..n_methods {
                if a != b && !d[a].is_empty() && !d[b].is_empty() && significantly_better(&d[a], &d[b], alpha) {
                    counts[a] += 1;
                }
            }
        }
    }
    Ok(counts)
}
