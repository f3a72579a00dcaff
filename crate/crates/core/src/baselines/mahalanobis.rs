//! Nearest-centroid classification under per-class Mahalanobis distance.

use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor of a row-major `d x d` matrix, or `None`
/// if the matrix is not numerically positive definite.
pub fn cholesky<T: Scalar>(a: &[T], d: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s = s - l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) || !s.is_finite() {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats<T> {
    pub centroid: Vec<T>,
    pub covariance: Vec<T>,
    /// Cholesky factor of `covariance`; `None` selects Euclidean distance.
    factor: Option<Vec<T>>,
}

impl<T: Scalar> ClassStats<T> {
    pub fn new(centroid: Vec<T>, covariance: Vec<T>) -> Self {
        let d = centroid.len();
        assert_eq!(covariance.len(), d * d, "covariance must be d x d");
        let factor = cholesky(&covariance, d);
        Self {
            centroid,
            covariance,
            factor,
        }
    }

    pub fn uses_mahalanobis(&self) -> bool {
        self.factor.is_some()
    }

    /// Squared distance from `z` to the centroid. NaN is reported as infinity.
    pub fn squared_distance(&self, z: &[T]) -> T {
        let d = self.centroid.len();
        let diff: Vec<T> = z.iter().zip(&self.centroid).map(|(&a, &b)| a - b).collect();
        let dist = match &self.factor {
            // solve L y = diff, then |y|^2 = diff' S^-1 diff
            Some(l) => {
                let mut y = vec![T::zero(); d];
                for i in 0..d {
                    let mut s = diff[i];
                    for k in 0..i {
                        s = s - l[i * d + k] * y[k];
                    }
                    y[i] = s / l[i * d + i];
                }
                y.iter().fold(T::zero(), |acc, &v| acc + v * v)
            }
            None => diff.iter().fold(T::zero(), |acc, &v| acc + v * v),
        };
        if dist.is_nan() {
            T::infinity()
        } else {
            dist
        }
    }
}

/// Per-class centroid and covariance over mapped training points.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel<T> {
    dim: usize,
    classes: [Option<ClassStats<T>>; 2],
}

impl<T: Scalar> ClassModel<T> {
    /// Fits class statistics to `points` (row-major, `dim` columns). The
    /// sample covariance is regularized by `eps * I` with
    /// `eps = 1e-8 * max(trace / dim, 1)`.
    pub fn fit(points: &[T], labels: &[u8], dim: usize) -> Self {
        assert_eq!(points.len(), labels.len() * dim);
        let classes = [0u8, 1].map(|c| {
            let rows: Vec<&[T]> = labels
                .iter()
                .enumerate()
                .filter(|&(_, &l)| l == c)
                .map(|(i, _)| &points[i * dim..(i + 1) * dim])
                .collect();
            (!rows.is_empty()).then(|| fit_class(&rows, dim))
        });
        Self { dim, classes }
    }

    /// Builds a model from explicit statistics, without regularization.
    pub fn from_parts(class0: Option<(Vec<T>, Vec<T>)>, class1: Option<(Vec<T>, Vec<T>)>) -> Self {
        let dim = class0
            .as_ref()
            .or(class1.as_ref())
            .map_or(0, |(c, _)| c.len());
        Self {
            dim,
            classes: [class0, class1].map(|c| c.map(|(mu, cov)| ClassStats::new(mu, cov))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class(&self, c: u8) -> Option<&ClassStats<T>> {
        self.classes[usize::from(c)].as_ref()
    }

    /// Class with the nearest centroid; ties and missing classes favour 0.
    pub fn classify(&self, z: &[T]) -> u8 {
        let dist = |c: usize| {
            self.classes[c]
                .as_ref()
                .map_or(T::infinity(), |s| s.squared_distance(z))
        };
        let (d0, d1) = (dist(0), dist(1));
        if self.classes[0].is_none() || d1 < d0 {
            1
        } else {
            0
        }
    }

    /// Classifies each row of a row-major `n x dim` matrix.
    pub fn classify_rows(&self, points: &[T]) -> Vec<u8> {
        if self.dim == 0 {
            return Vec::new();
        }
        points.chunks(self.dim).map(|z| self.classify(z)).collect()
    }
}

fn fit_class<T: Scalar>(rows: &[&[T]], d: usize) -> ClassStats<T> {
    let n = T::of(rows.len() as f64);
    let mut mean = vec![T::zero(); d];
    for r in rows {
        for (m, &v) in mean.iter_mut().zip(r.iter()) {
            *m = *m + v;
        }
    }
    for m in &mut mean {
        *m = *m / n;
    }
    let mut cov = vec![T::zero(); d * d];
    if rows.len() > 1 {
        let denom = T::of((rows.len() - 1) as f64);
        for i in 0..d {
            for j in i..d {
                let s = rows
                    .iter()
                    .fold(T::zero(), |acc, r| acc + (r[i] - mean[i]) * (r[j] - mean[j]));
                cov[i * d + j] = s / denom;
                cov[j * d + i] = s / denom;
            }
        }
    }
    let trace = (0..d).fold(T::zero(), |acc, i| acc + cov[i * d + i]);
    let eps = T::of(1e-8) * (trace / T::of(d as f64)).max(T::one());
    for i in 0..d {
        cov[i * d + i] = cov[i * d + i] + eps;
    }
    ClassStats::new(mean, cov)
}
