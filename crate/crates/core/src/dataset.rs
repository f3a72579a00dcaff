//! Tabular binary-classification data, train/test partitions, per-tree bags
//! and the feature similarity table used to repair crossover offspring.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fraction of observations assigned to the training partition.
pub const TRAIN_FRACTION: f64 = 0.70;
/// Fraction of training observations drawn into a [`SamplingMode::FixedObs`] bag.
pub const FIXED_BAG_FRACTION: f64 = 0.60;

/// Numeric feature matrix (row-major) with 0/1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Vec<T>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    n_feat: usize,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from rows, checking shape, finiteness and that both
    /// classes are present. `feature_names` defaults to `x0, x1, ...`.
    pub fn new(rows: Vec<Vec<T>>, labels: Vec<u8>, feature_names: Option<Vec<String>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty);
        }
        let n_feat = rows[0].len();
        let mut features = Vec::with_capacity(rows.len() * n_feat);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_feat {
                return Err(Error::InvalidData(format!(
                    "row {i} has {} values, expected {n_feat}",
                    row.len()
                )));
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(features, labels, n_feat, feature_names)
    }

    pub fn from_flat(
        features: Vec<T>,
        labels: Vec<u8>,
        n_feat: usize,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if n_feat == 0 {
            return Err(Error::InvalidData("at least one feature is required".into()));
        }
        if labels.len() < 2 {
            return Err(Error::InvalidData("at least two observations are required".into()));
        }
        if features.len() != labels.len() * n_feat {
            return Err(Error::InvalidData(format!(
                "{} values do not form {} rows of {n_feat} features",
                features.len(),
                labels.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value at row {}, feature {}",
                pos / n_feat,
                pos % n_feat
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidData("labels must be 0 or 1".into()));
        }
        let positives = labels.iter().filter(|&&l| l == 1).count();
        if positives == 0 || positives == labels.len() {
            return Err(Error::ClassCount(1));
        }
        let feature_names = match feature_names {
            Some(names) if names.len() == n_feat => names,
            Some(names) => {
                return Err(Error::InvalidData(format!(
                    "{} feature names for {n_feat} features",
                    names.len()
                )))
            }
            None => (0..n_feat).map(|j| format!("x{j}")).collect(),
        };
        Ok(Self {
            features,
            labels,
            feature_names,
            n_feat,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.labels.len()
    }

    pub fn n_feat(&self) -> usize {
        self.n_feat
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.n_feat..(i + 1) * self.n_feat]
    }

    pub fn value(&self, row: usize, feature: usize) -> T {
        self.features[row * self.n_feat + feature]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn positive_fraction(&self) -> f64 {
        self.labels.iter().filter(|&&l| l == 1).count() as f64 / self.n_obs() as f64
    }

    /// Copies the given rows into a standalone matrix.
    pub fn rows(&self, indices: &[usize]) -> Vec<Vec<T>> {
        indices.iter().map(|&i| self.row(i).to_vec()).collect()
    }

    pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_reader(file, options)
    }

    /// Parses comma-separated text. The two distinct label values are mapped
    /// to 0 and 1, the smaller one (numerically if both parse as numbers,
    /// lexicographically otherwise) becoming class 0.
    pub fn from_csv_reader<R: Read>(reader: R, options: &CsvOptions) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(options.has_header)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Option<Vec<String>> = if options.has_header {
            let h = reader.headers().map_err(csv_error)?;
            Some(h.iter().map(str::to_owned).collect())
        } else {
            None
        };

        let mut raw_labels = Vec::new();
        let mut features = Vec::new();
        let mut width: Option<usize> = None;
        let mut label_idx: Option<usize> = None;
        for record in reader.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.iter().all(str::is_empty) {
                continue;
            }
            let w = *width.get_or_insert(record.len());
            if record.len() != w {
                return Err(Error::Parse {
                    row: line,
                    column: record.len(),
                    message: format!("expected {w} fields, found {}", record.len()),
                });
            }
            let li = match label_idx {
                Some(li) => li,
                None => {
                    let li = options.label.resolve(header.as_deref(), w)?;
                    label_idx = Some(li);
                    li
                }
            };
            for (j, cell) in record.iter().enumerate() {
                if j == li {
                    raw_labels.push(cell.to_owned());
                    continue;
                }
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row: line,
                    column: j + 1,
                    message: format!("'{cell}' is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row: line,
                        column: j + 1,
                        message: format!("'{cell}' is not finite"),
                    });
                }
                features.push(T::of(v));
            }
        }
        let (Some(w), Some(li)) = (width, label_idx) else {
            return Err(Error::Empty);
        };
        if w < 2 {
            return Err(Error::InvalidData("need a label column and at least one feature".into()));
        }

        let mut classes: Vec<&str> = raw_labels.iter().map(String::as_str).collect();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() != 2 {
            return Err(Error::ClassCount(classes.len()));
        }
        let negative = match (classes[0].parse::<f64>(), classes[1].parse::<f64>()) {
            (Ok(a), Ok(b)) if b < a => classes[1],
            _ => classes[0],
        }
        .to_owned();
        let labels = raw_labels.iter().map(|l| u8::from(*l != negative)).collect();
        let names = header.map(|h| {
            h.into_iter()
                .enumerate()
                .filter(|&(j, _)| j != li)
                .map(|(_, n)| n)
                .collect()
        });
        Self::from_flat(features, labels, w - 1, names)
    }
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        row,
        column: 0,
        message: e.to_string(),
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl LabelColumn {
    fn resolve(&self, header: Option<&[String]>, width: usize) -> Result<usize> {
        match self {
            LabelColumn::Index(i) if *i < width => Ok(*i),
            LabelColumn::Index(i) => Err(Error::LabelColumn(i.to_string())),
            LabelColumn::Name(name) if name == "last" => Ok(width - 1),
            LabelColumn::Name(name) => header
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| Error::LabelColumn(name.clone())),
        }
    }
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("last".into())
    }
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_owned()),
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub has_header: bool,
    pub label: LabelColumn,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            label: LabelColumn::default(),
        }
    }
}

/// Disjoint train/test partition of row indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl DataSplit {
    /// Number of training rows for `n_obs` observations.
    pub fn train_size(n_obs: usize) -> usize {
        (TRAIN_FRACTION * n_obs as f64).round() as usize
    }

    /// Uniform random 70/30 partition (not stratified).
    pub fn random<R: Rng + ?Sized>(n_obs: usize, rng: &mut R) -> Self {
        let n_train = Self::train_size(n_obs);
        let mut picked = vec![false; n_obs];
        for i in sample(rng, n_obs, n_train) {
            picked[i] = true;
        }
        let (train, test): (Vec<usize>, Vec<usize>) = (0..n_obs).partition(|&i| picked[i]);
        Self { train, test }
    }
}

pub fn split<T: Scalar, R: Rng + ?Sized>(ds: &Dataset<T>, rng: &mut R) -> DataSplit {
    DataSplit::random(ds.n_obs(), rng)
}

/// Sorted set of allowed feature indices with O(1) membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMask {
    features: Vec<usize>,
    allowed: Vec<bool>,
}

impl FeatureMask {
    pub fn full(n_feat: usize) -> Self {
        Self {
            features: (0..n_feat).collect(),
            allowed: vec![true; n_feat],
        }
    }

    pub fn new(features: impl IntoIterator<Item = usize>, n_feat: usize) -> Result<Self> {
        let mut allowed = vec![false; n_feat];
        for f in features {
            if f >= n_feat {
                return Err(Error::InvalidData(format!("feature {f} out of range 0..{n_feat}")));
            }
            allowed[f] = true;
        }
        let features: Vec<usize> = (0..n_feat).filter(|&f| allowed[f]).collect();
        if features.is_empty() {
            return Err(Error::InvalidData("feature mask is empty".into()));
        }
        Ok(Self { features, allowed })
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.allowed.get(feature).copied().unwrap_or(false)
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn n_feat(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_full(&self) -> bool {
        self.features.len() == self.allowed.len()
    }
}

impl Serialize for FeatureMask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (&self.features, self.allowed.len()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (features, n_feat) = <(Vec<usize>, usize)>::deserialize(d)?;
        FeatureMask::new(features, n_feat).map_err(serde::de::Error::custom)
    }
}

/// How a tree's observations and features are subsampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingMode {
    /// 60% of the training observations, every feature.
    FixedObs,
    /// A uniformly random number of observations and of features, redrawn per bag.
    RandomObsFeat,
    /// Every training observation and every feature.
    FullData,
}

/// The slice of training data a tree may see.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bag {
    /// Dataset row indices, a sorted subset of the training partition.
    pub obs: Vec<usize>,
    pub mask: FeatureMask,
}

pub fn sample_bag<R: Rng + ?Sized>(split: &DataSplit, n_feat: usize, mode: SamplingMode, rng: &mut R) -> Bag {
    let n_train = split.train.len();
    let (n_obs, n_mask) = match mode {
        SamplingMode::FullData => {
            return Bag {
                obs: split.train.clone(),
                mask: FeatureMask::full(n_feat),
            }
        }
        SamplingMode::FixedObs => (
            ((FIXED_BAG_FRACTION * n_train as f64).round() as usize).max(1),
            n_feat,
        ),
        SamplingMode::RandomObsFeat => (rng.gen_range(1..=n_train), rng.gen_range(1..=n_feat)),
    };
    let mut obs: Vec<usize> = sample(rng, n_train, n_obs).into_iter().map(|i| split.train[i]).collect();
    obs.sort_unstable();
    let mask = if n_mask == n_feat {
        FeatureMask::full(n_feat)
    } else {
        FeatureMask::new(sample(rng, n_feat, n_mask), n_feat).expect("sampled features are in range")
    };
    Bag { obs, mask }
}

/// Pairwise similarity of feature columns over the training partition,
/// `S(x, y) = sum |x_k||y_k| / (||x|| ||y||)`. Columns with zero norm are
/// 0-similar to everything, themselves included.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSimilarity<T> {
    n_feat: usize,
    sim: Vec<T>,
}

impl<T: Scalar> FeatureSimilarity<T> {
    pub fn compute(ds: &Dataset<T>, split: &DataSplit) -> Self {
        let n = ds.n_feat();
        let columns: Vec<Vec<T>> = (0..n)
            .map(|j| split.train.iter().map(|&i| ds.value(i, j).abs()).collect())
            .collect();
        let norms: Vec<T> = columns
            .iter()
            .map(|c| c.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt())
            .collect();
        let mut sim = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let denom = norms[i] * norms[j];
                let s = if denom > T::zero() && denom.is_finite() {
                    let dot = columns[i]
                        .iter()
                        .zip(&columns[j])
                        .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
                    dot / denom
                } else {
                    T::zero()
                };
                sim[i * n + j] = s;
                sim[j * n + i] = s;
            }
        }
        Self { n_feat: n, sim }
    }

    /// Wraps a precomputed symmetric matrix given row-major.
    pub fn from_matrix(n_feat: usize, sim: Vec<T>) -> Result<Self> {
        if sim.len() != n_feat * n_feat {
            return Err(Error::InvalidData("similarity matrix is not square".into()));
        }
        Ok(Self { n_feat, sim })
    }

    pub fn n_feat(&self) -> usize {
        self.n_feat
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.sim[i * self.n_feat + j]
    }

    /// The allowed feature most similar to `feature`; ties go to the lowest index.
    pub fn most_similar(&self, feature: usize, mask: &FeatureMask) -> usize {
        let mut best = mask.features()[0];
        let mut best_sim = self.get(feature, best);
        for &f in &mask.features()[1..] {
            let s = self.get(feature, f);
            if s > best_sim {
                best = f;
                best_sim = s;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn csv(text: &str, header: bool, label: &str) -> Result<Dataset<f64>> {
        Dataset::from_csv_reader(
            text.as_bytes(),
            &CsvOptions {
                has_header: header,
                label: label.parse().unwrap(),
            },
        )
    }

    fn toy(n_obs: usize, n_feat: usize) -> Dataset<f64> {
        let rows = (0..n_obs)
            .map(|i| (0..n_feat).map(|j| (i * n_feat + j) as f64 + 1.0).collect())
            .collect();
        let labels = (0..n_obs).map(|i| (i % 2) as u8).collect();
        Dataset::new(rows, labels, None).unwrap()
    }

    #[test]
    fn two_row_file_maps_labels() {
        let ds = csv("a,y\n1.5,A\n2.5,B\n", true, "y").unwrap();
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.n_feat(), 1);
        assert_eq!(ds.feature_names(), &["a".to_string()]);
    }

    #[test]
    fn numeric_labels_compare_numerically() {
        // lexicographically "10" < "4", numerically 4 < 10
        let ds = csv("1,10\n2,4\n3,4\n", false, "1").unwrap();
        assert_eq!(ds.labels(), &[1, 0, 0]);
        assert_eq!(ds.feature_names(), &["x0".to_string()]);
    }

    #[test]
    fn label_by_index_and_last() {
        let ds = csv("c,1,2\nd,3,4\n", false, "0").unwrap();
        assert_eq!(ds.row(1), &[3.0, 4.0]);
        assert_eq!(ds.labels(), &[0, 1]);
        let ds = csv("f,g,y\n1,2,n\n3,4,p\n", true, "last").unwrap();
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.n_feat(), 2);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(csv("", true, "y"), Err(Error::Empty)));
        assert!(matches!(csv("a,y\n", true, "y"), Err(Error::Empty)));
        assert!(matches!(csv("a,y\n1,A\n2,A\n", true, "y"), Err(Error::ClassCount(1))));
        assert!(matches!(
            csv("a,y\n1,A\n2,B\n3,C\n", true, "y"),
            Err(Error::ClassCount(3))
        ));
        match csv("a,b,y\n1,2,A\n3,oops,B\n", true, "y") {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(csv("a,y\n1,A\n2,B\n", true, "z"), Err(Error::LabelColumn(_))));
        assert!(matches!(csv("a,y\nNaN,A\n2,B\n", true, "y"), Err(Error::Parse { .. })));
    }

    #[test]
    fn dataset_invariants() {
        assert!(Dataset::<f64>::new(vec![vec![1.0], vec![2.0]], vec![0, 0], None).is_err());
        assert!(Dataset::<f64>::new(vec![vec![1.0], vec![2.0, 3.0]], vec![0, 1], None).is_err());
        assert!(Dataset::<f64>::new(vec![vec![f64::NAN], vec![2.0]], vec![0, 1], None).is_err());
        assert!(Dataset::<f64>::new(vec![vec![1.0]], vec![0], None).is_err());
    }

    #[test]
    fn split_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = DataSplit::random(10, &mut rng);
        assert_eq!((s.train.len(), s.test.len()), (7, 3));
        assert_eq!(DataSplit::train_size(683), 478);
        let s = DataSplit::random(683, &mut rng);
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..683).collect::<Vec<_>>());
        let a = DataSplit::random(50, &mut ChaCha8Rng::seed_from_u64(9));
        let b = DataSplit::random(50, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        let s = DataSplit::random(2, &mut rng);
        assert_eq!((s.train.len(), s.test.len()), (1, 1));
    }

    #[test]
    fn bag_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let split = DataSplit::random(683, &mut rng);
        let bag = sample_bag(&split, 11, SamplingMode::FixedObs, &mut rng);
        assert_eq!((bag.obs.len(), bag.mask.len()), (287, 11));
        let bag = sample_bag(&split, 11, SamplingMode::FullData, &mut rng);
        assert_eq!(bag.obs, split.train);
        assert!(bag.mask.is_full());

        let small = DataSplit {
            train: vec![0, 2, 4, 6, 8],
            test: vec![1, 3],
        };
        for _ in 0..200 {
            let bag = sample_bag(&small, 3, SamplingMode::RandomObsFeat, &mut rng);
            assert!((1..=5).contains(&bag.obs.len()));
            assert!((1..=3).contains(&bag.mask.len()));
            assert!(bag.obs.iter().all(|o| small.train.contains(o)));
            assert!(bag.obs.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn fixed_bag_inclusion_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let split = DataSplit::random(100, &mut rng);
        let draws = 2000;
        let mut counts = vec![0usize; 100];
        for _ in 0..draws {
            for o in sample_bag(&split, 2, SamplingMode::FixedObs, &mut rng).obs {
                counts[o] += 1;
            }
        }
        // bag holds 42 of 70, so inclusion probability is exactly 0.6
        let p = 42.0 / 70.0;
        let expected = draws as f64 * p;
        let var = draws as f64 * p * (1.0 - p);
        let chi2: f64 = split
            .train
            .iter()
            .map(|&i| (counts[i] as f64 - expected).powi(2) / var)
            .sum();
        // 70 cells; the 0.999 quantile of chi-square(70) is about 112
        assert!(chi2 < 112.0, "chi2 = {chi2}");
        assert!(split.test.iter().all(|&i| counts[i] == 0));
    }

    #[test]
    fn similarity_examples() {
        let rows = vec![vec![1.0, 0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0, 4.0], vec![0.0, 0.0, 3.0, 6.0]];
        let ds = Dataset::new(rows, vec![0, 1, 0], None).unwrap();
        let split = DataSplit {
            train: vec![0, 1, 2],
            test: vec![],
        };
        let sim: FeatureSimilarity<f64> = FeatureSimilarity::compute(&ds, &split);
        assert!((sim.get(2, 2) - 1.0).abs() < 1e-12);
        assert_eq!(sim.get(0, 1), 0.0);
        assert!((sim.get(2, 3) - 1.0).abs() < 1e-12);
        assert_eq!(sim.get(2, 3), sim.get(3, 2));
    }

    #[test]
    fn similarity_uses_magnitudes_and_training_rows() {
        let rows = vec![vec![1.0, -1.0, 0.0], vec![2.0, -2.0, 0.0], vec![100.0, 5.0, 0.0]];
        let ds = Dataset::new(rows, vec![0, 1, 1], None).unwrap();
        let split = DataSplit {
            train: vec![0, 1],
            test: vec![2],
        };
        let sim: FeatureSimilarity<f64> = FeatureSimilarity::compute(&ds, &split);
        assert!((sim.get(0, 1) - 1.0).abs() < 1e-12);
        assert_eq!(sim.get(2, 2), 0.0);
        assert_eq!(sim.get(0, 2), 0.0);
    }

    #[test]
    fn most_similar_picks_argmax_then_lowest_index() {
        let n = 8;
        let mut m = vec![0.0; n * n];
        m[7 * n + 1] = 0.9;
        m[7 * n + 2] = 0.3;
        let sim = FeatureSimilarity::from_matrix(n, m).unwrap();
        let legal = FeatureMask::new([1, 2], n).unwrap();
        assert_eq!(sim.most_similar(7, &legal), 1);
        let tied = FeatureMask::new([4, 5, 6], n).unwrap();
        assert_eq!(sim.most_similar(7, &tied), 4);
    }

    #[test]
    fn similarity_properties_on_toy() {
        let ds = toy(9, 4);
        let split = DataSplit {
            train: (0..9).collect(),
            test: vec![],
        };
        let sim: FeatureSimilarity<f64> = FeatureSimilarity::compute(&ds, &split);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(sim.get(i, j), sim.get(j, i));
                assert!(sim.get(i, j) <= 1.0 + 1e-12);
                assert!(sim.get(i, i) >= sim.get(i, j) - 1e-12);
            }
        }
    }

    #[test]
    fn mask_serde_round_trip() {
        let mask = FeatureMask::new([3, 1], 5).unwrap();
        assert_eq!(mask.features(), &[1, 3]);
        let json = serde_json::to_string(&mask).unwrap();
        assert_eq!(json, "[[1,3],5]");
        assert_eq!(serde_json::from_str::<FeatureMask>(&json).unwrap(), mask);
        assert!(FeatureMask::new([], 3).is_err());
        assert!(FeatureMask::new([3], 3).is_err());
    }
}
