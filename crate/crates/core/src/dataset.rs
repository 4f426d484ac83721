//! Datasets, min-max normalization, three-bin discretization and train/test
//! split plans.
//!
//! Values are stored feature-major: row `i` of [`Dataset::values`] is feature
//! `i` observed over all `N` instances. Every later stage works on feature
//! vectors, so this is the natural layout.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    values: Matrix,
    labels: Vec<usize>,
    n_classes: usize,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from an `M × N` feature-major matrix and per-instance
    /// class ids, which must be exactly `0..Y` with every class present.
    pub fn new(
        name: impl Into<String>,
        values: Matrix,
        labels: Vec<usize>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if values.rows() == 0 {
            return Err(Error::Shape("dataset needs at least one feature".into()));
        }
        if values.cols() < 2 {
            return Err(Error::Shape("dataset needs at least two instances".into()));
        }
        if labels.len() != values.cols() {
            return Err(Error::Shape(format!(
                "{} labels for {} instances",
                labels.len(),
                values.cols()
            )));
        }
        if let Some(names) = &feature_names {
            if names.len() != values.rows() {
                return Err(Error::Shape(format!(
                    "{} feature names for {} features",
                    names.len(),
                    values.rows()
                )));
            }
        }
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("feature values must be finite".into()));
        }
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; n_classes];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::DegenerateLabels(format!(
                "class id {missing} has no instances"
            )));
        }
        if n_classes < 2 {
            return Err(Error::DegenerateLabels("only one class present".into()));
        }
        Ok(Self {
            name: name.into(),
            values,
            labels,
            n_classes,
            feature_names,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// `M`
    pub fn n_features(&self) -> usize {
        self.values.rows()
    }

    /// `N`
    pub fn n_instances(&self) -> usize {
        self.values.cols()
    }

    /// `Y`
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// Instance-major rows restricted to `features` and `instances`, in the
    /// given orders. This is the layout classifiers consume.
    pub fn instance_rows(&self, features: &[usize], instances: &[usize]) -> Vec<Vec<f64>> {
        instances
            .iter()
            .map(|&n| features.iter().map(|&f| self.values[(f, n)]).collect())
            .collect()
    }
}

/// Re-encodes arbitrary class identifiers to `0..Y` by order of first
/// occurrence.
pub fn encode_labels<T: PartialEq + Clone>(raw: &[T]) -> (Vec<usize>, Vec<T>) {
    let mut classes: Vec<T> = Vec::new();
    let codes = raw
        .iter()
        .map(|v| match classes.iter().position(|c| c == v) {
            Some(i) => i,
            None => {
                classes.push(v.clone());
                classes.len() - 1
            }
        })
        .collect();
    (codes, classes)
}

/// Maps each feature independently onto `[−1, 1]` by min-max scaling.
/// Constant features become all zeros. Features already spanning exactly
/// `[−1, 1]` are left untouched, which makes the map idempotent.
pub fn normalize(d: &Dataset) -> Dataset {
    let m = d.n_features();
    let n = d.n_instances();
    let mut values = d.values.clone();
    for i in 0..m {
        let row = values.row_mut(i);
        let (lo, hi) = row
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if lo == -1.0 && hi == 1.0 {
            continue;
        }
        let span = hi - lo;
        for v in row.iter_mut().take(n) {
            *v = if span > 0.0 {
                (2.0 * (*v - lo) / span - 1.0).clamp(-1.0, 1.0)
            } else {
                0.0
            };
        }
    }
    Dataset {
        values,
        ..d.clone()
    }
}

/// Three-bin codes per feature: `0` below `μ − σ`, `1` inside `[μ − σ, μ + σ]`,
/// `2` above `μ + σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedDataset {
    n_features: usize,
    n_instances: usize,
    codes: Vec<u8>,
    bin_edges: Vec<(f64, f64)>,
}

impl DiscretizedDataset {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn feature(&self, i: usize) -> &[u8] {
        &self.codes[i * self.n_instances..(i + 1) * self.n_instances]
    }

    pub fn bin_edges(&self) -> &[(f64, f64)] {
        &self.bin_edges
    }

    /// Raw feature-major code buffer.
    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    /// Keeps only the listed instances (columns), preserving bin edges.
    pub fn select_instances(&self, instances: &[usize]) -> Self {
        let mut codes = Vec::with_capacity(self.n_features * instances.len());
        for f in 0..self.n_features {
            let row = self.feature(f);
            codes.extend(instances.iter().map(|&n| row[n]));
        }
        Self {
            n_features: self.n_features,
            n_instances: instances.len(),
            codes,
            bin_edges: self.bin_edges.clone(),
        }
    }

    /// Builds codes directly, e.g. for synthetic fixtures. Codes are not
    /// restricted to three bins here; `bin_edges` is left empty.
    pub fn from_codes(n_features: usize, n_instances: usize, codes: Vec<u8>) -> Result<Self> {
        if codes.len() != n_features * n_instances {
            return Err(Error::Shape(format!(
                "{} codes for {n_features}×{n_instances}",
                codes.len()
            )));
        }
        Ok(Self {
            n_features,
            n_instances,
            codes,
            bin_edges: Vec::new(),
        })
    }
}

/// Population mean and standard deviation over `idx` (or all values).
fn mean_std(values: &[f64], idx: Option<&[usize]>) -> (f64, f64) {
    let (sum, count) = match idx {
        Some(idx) => (idx.iter().map(|&i| values[i]).sum::<f64>(), idx.len()),
        None => (values.iter().sum::<f64>(), values.len()),
    };
    let mean = sum / count as f64;
    let sq = match idx {
        Some(idx) => idx
            .iter()
            .map(|&i| (values[i] - mean) * (values[i] - mean))
            .sum::<f64>(),
        None => values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>(),
    };
    (mean, libm::sqrt(sq / count as f64))
}

fn discretize_impl(d: &Dataset, stats_on: Option<&[usize]>) -> DiscretizedDataset {
    let m = d.n_features();
    let n = d.n_instances();
    let mut codes = Vec::with_capacity(m * n);
    let mut bin_edges = Vec::with_capacity(m);
    for i in 0..m {
        let row = d.feature(i);
        let (mu, sigma) = mean_std(row, stats_on);
        let (lo, hi) = (mu - sigma, mu + sigma);
        bin_edges.push((lo, hi));
        if sigma == 0.0 {
            codes.extend(core::iter::repeat_n(1u8, n));
            continue;
        }
        codes.extend(row.iter().map(|&v| {
            if v < lo {
                0
            } else if v > hi {
                2
            } else {
                1
            }
        }));
    }
    DiscretizedDataset {
        n_features: m,
        n_instances: n,
        codes,
        bin_edges,
    }
}

/// Discretizes every feature with statistics computed over all instances.
pub fn discretize(d: &Dataset) -> DiscretizedDataset {
    discretize_impl(d, None)
}

/// Discretizes every instance, with `μ` and `σ` computed on `fit_instances`
/// only (e.g. a training fold).
pub fn discretize_fitted(d: &Dataset, fit_instances: &[usize]) -> Result<DiscretizedDataset> {
    if fit_instances.is_empty() {
        return Err(Error::param("fit_instances", "must be nonempty"));
    }
    if let Some(&bad) = fit_instances.iter().find(|&&i| i >= d.n_instances()) {
        return Err(Error::param(
            "fit_instances",
            format!("index {bad} out of range"),
        ));
    }
    Ok(discretize_impl(d, Some(fit_instances)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    RandomHoldout {
        train_fraction: f64,
        n_repeats: usize,
    },
    LeaveOneOut,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub seed: u64,
    pub assignments: Vec<Split>,
}

/// Builds train/test assignments. Holdout splits are stratified per class so
/// every class keeps at least one training and one test instance; the
/// overall training size is `round(train_fraction · N)` up to that
/// constraint.
pub fn make_splits(labels: &[usize], kind: SplitKind, seed: u64) -> Result<SplitPlan> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::Shape("need at least two instances to split".into()));
    }
    let assignments = match kind {
        SplitKind::LeaveOneOut => (0..n)
            .map(|i| Split {
                train: (0..n).filter(|&j| j != i).collect(),
                test: vec![i],
            })
            .collect(),
        SplitKind::RandomHoldout {
            train_fraction,
            n_repeats,
        } => {
            if !(train_fraction > 0.0 && train_fraction < 1.0) {
                return Err(Error::param("train_fraction", "must lie in (0, 1)"));
            }
            if n_repeats == 0 {
                return Err(Error::param("n_repeats", "must be at least 1"));
            }
            let n_classes = labels.iter().max().map_or(0, |m| m + 1);
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
            for (i, &l) in labels.iter().enumerate() {
                by_class[l].push(i);
            }
            by_class.retain(|c| !c.is_empty());
            if let Some(c) = by_class.iter().find(|c| c.len() < 2) {
                return Err(Error::DegenerateLabels(format!(
                    "instance {} is the only member of its class; holdout needs two per class",
                    c[0]
                )));
            }
            let quotas = stratified_quotas(&by_class, train_fraction, n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n_repeats)
                .map(|_| {
                    let mut train = Vec::new();
                    let mut test = Vec::new();
                    for (members, &q) in by_class.iter().zip(&quotas) {
                        let mut shuffled = members.clone();
                        shuffled.shuffle(&mut rng);
                        train.extend_from_slice(&shuffled[..q]);
                        test.extend_from_slice(&shuffled[q..]);
                    }
                    train.sort_unstable();
                    test.sort_unstable();
                    Split { train, test }
                })
                .collect()
        }
    };
    Ok(SplitPlan {
        kind,
        seed,
        assignments,
    })
}

/// Largest-remainder apportionment of the training budget across classes,
/// each class clamped to `[1, size − 1]`.
fn stratified_quotas(by_class: &[Vec<usize>], fraction: f64, n: usize) -> Vec<usize> {
    let target = libm::round(fraction * n as f64) as usize;
    let exact: Vec<f64> = by_class.iter().map(|c| fraction * c.len() as f64).collect();
    let mut quotas: Vec<usize> = by_class
        .iter()
        .zip(&exact)
        .map(|(c, &e)| (libm::floor(e) as usize).clamp(1, c.len() - 1))
        .collect();
    let mut order: Vec<usize> = (0..by_class.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - libm::floor(exact[a]);
        let rb = exact[b] - libm::floor(exact[b]);
        rb.partial_cmp(&ra)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut total: usize = quotas.iter().sum();
    let mut progressed = true;
    while total < target && progressed {
        progressed = false;
        for &c in &order {
            if total >= target {
                break;
            }
            if quotas[c] < by_class[c].len() - 1 {
                quotas[c] += 1;
                total += 1;
                progressed = true;
            }
        }
    }
    progressed = true;
    while total > target && progressed {
        progressed = false;
        for &c in order.iter().rev() {
            if total <= target {
                break;
            }
            if quotas[c] > 1 {
                quotas[c] -= 1;
                total -= 1;
                progressed = true;
            }
        }
    }
    quotas
}
