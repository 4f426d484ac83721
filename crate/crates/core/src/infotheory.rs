//! Plug-in entropies and mutual information over discrete codes, the
//! normalized mutual-information distance, and assembly of the QP inputs.
//!
//! All logarithms are base 2; results are in bits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::DiscretizedDataset;
use crate::linalg::Matrix;
use crate::{Error, Result};

/// A discrete symbol usable as a histogram index.
pub trait Code: Copy {
    fn index(self) -> usize;
}

macro_rules! impl_code {
    ($($t:ty),*) => {$(
        impl Code for $t {
            #[inline]
            fn index(self) -> usize {
                self as usize
            }
        }
    )*};
}

impl_code!(u8, u16, u32, usize);

fn alphabet<T: Code>(xs: &[T]) -> usize {
    xs.iter().map(|x| x.index()).max().map_or(0, |m| m + 1)
}

/// `−Σ (c/n) log₂(c/n)` over the nonzero histogram counts, summed in the
/// order given.
fn entropy_of_counts(counts: &[u32], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * libm::log2(p);
        }
    }
    h.max(0.0)
}

/// Shannon entropy of the empirical distribution of `xs`. Empty input has
/// zero entropy.
pub fn entropy<T: Code>(xs: &[T]) -> f64 {
    let mut counts = vec![0u32; alphabet(xs)];
    for x in xs {
        counts[x.index()] += 1;
    }
    entropy_of_counts(&counts, xs.len())
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("sequences have lengths {a} and {b}")));
    }
    Ok(())
}

/// Joint counts laid out `a`-major; `buf` is reused across calls.
fn joint_counts<A: Code, B: Code>(a: &[A], b: &[B], ka: usize, kb: usize, buf: &mut Vec<u32>) {
    buf.clear();
    buf.resize(ka * kb, 0);
    for (x, y) in a.iter().zip(b) {
        buf[x.index() * kb + y.index()] += 1;
    }
}

/// Entropy of the paired sequence `(a_t, b_t)`.
pub fn joint_entropy<A: Code, B: Code>(a: &[A], b: &[B]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    let mut buf = Vec::new();
    joint_counts(a, b, alphabet(a), alphabet(b), &mut buf);
    Ok(entropy_of_counts(&buf, a.len()))
}

/// `H(a) + H(b) − H(a, b)`, clamped at zero.
pub fn mutual_information<A: Code, B: Code>(a: &[A], b: &[B]) -> Result<f64> {
    let hab = joint_entropy(a, b)?;
    Ok((entropy(a) + entropy(b) - hab).max(0.0))
}

/// Normalized mutual-information distance, a metric with values in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MiDistance(f64);

impl MiDistance {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Distance from precomputed marginal and joint entropies. Zero when both
/// marginals are zero.
#[inline]
pub fn distance_from_entropies(ha: f64, hb: f64, hab: f64) -> f64 {
    let hmax = ha.max(hb);
    if hmax <= 0.0 {
        return 0.0;
    }
    let mi = (ha + hb - hab).max(0.0);
    (1.0 - mi / hmax).clamp(0.0, 1.0)
}

/// `1 − MI(a, b) / max(H(a), H(b))`.
pub fn mi_distance<T: Code>(a: &[T], b: &[T]) -> Result<MiDistance> {
    check_len(a.len(), b.len())?;
    // Canonical argument order keeps the joint-entropy summation order, and
    // hence the result, exactly symmetric.
    let (a, b) = if a.iter().map(|x| x.index()).le(b.iter().map(|x| x.index())) {
        (a, b)
    } else {
        (b, a)
    };
    let hab = joint_entropy(a, b)?;
    Ok(MiDistance(distance_from_entropies(
        entropy(a),
        entropy(b),
        hab,
    )))
}

/// How pairwise redundancy is measured when filling `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Redundancy {
    /// `Q_ij = MI(f_i, f_j)` in bits.
    #[default]
    MutualInformation,
    /// `Q_ij = 1 − d(f_i, f_j)`, the normalized similarity.
    NormalizedSimilarity,
}

/// The QP inputs: redundancy matrix `Q`, relevance vector `s` and the
/// trade-off `θ = q̄ / (q̄ + m̄)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityModel {
    q: Matrix,
    s: Vec<f64>,
    theta: f64,
    q_bar: f64,
    m_bar: f64,
}

impl SimilarityModel {
    /// Assembles a model from a symmetric `Q` and relevance `s`, deriving the
    /// means and `θ`.
    pub fn from_parts(q: Matrix, s: Vec<f64>) -> Result<Self> {
        if !q.is_square() || q.rows() != s.len() {
            return Err(Error::Shape(format!(
                "Q is {}×{} but s has {} entries",
                q.rows(),
                q.cols(),
                s.len()
            )));
        }
        let asym = q.max_asymmetry();
        if asym > 1e-8 {
            return Err(Error::NotSymmetric(asym));
        }
        let q_bar = q.mean();
        let m_bar = if s.is_empty() {
            0.0
        } else {
            s.iter().sum::<f64>() / s.len() as f64
        };
        Ok(Self {
            theta: theta_from_means(q_bar, m_bar),
            q,
            s,
            q_bar,
            m_bar,
        })
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn q_bar(&self) -> f64 {
        self.q_bar
    }

    pub fn m_bar(&self) -> f64 {
        self.m_bar
    }

    pub fn n_features(&self) -> usize {
        self.s.len()
    }

    /// Sub-model on `idx`, taken from this model's entries; `θ` and the means
    /// are recomputed from the restricted entries.
    pub fn restrict(&self, idx: &[usize]) -> Self {
        let q = self.q.submatrix(idx);
        let s = idx.iter().map(|&i| self.s[i]).collect();
        Self::from_parts(q, s).expect("principal submatrix of a valid model")
    }
}

/// `q̄ / (q̄ + m̄)`, or `0.5` when both means vanish.
pub fn theta_from_means(q_bar: f64, m_bar: f64) -> f64 {
    let denom = q_bar + m_bar;
    if denom > 0.0 {
        (q_bar / denom).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

/// Per-feature entropies cached over a discretized dataset, with pairwise
/// quantities computed on demand.
#[derive(Debug, Clone)]
pub struct PairwiseMi<'a> {
    dd: &'a DiscretizedDataset,
    entropies: Vec<f64>,
    alphabets: Vec<usize>,
    /// `-p log2 p` for `p = c / N`, indexed by count `c`.
    terms: Vec<f64>,
}

/// Joint entropy with a stack histogram for small alphabets.
fn joint_entropy_sized<A: Code, B: Code>(a: &[A], b: &[B], ka: usize, kb: usize) -> f64 {
    const STACK: usize = 64;
    if ka * kb <= STACK {
        let mut counts = [0u32; STACK];
        for (x, y) in a.iter().zip(b) {
            counts[x.index() * kb + y.index()] += 1;
        }
        entropy_of_counts(&counts[..ka * kb], a.len())
    } else {
        let mut buf = Vec::new();
        joint_counts(a, b, ka, kb, &mut buf);
        entropy_of_counts(&buf, a.len())
    }
}

impl<'a> PairwiseMi<'a> {
    pub fn new(dd: &'a DiscretizedDataset) -> Self {
        let (entropies, alphabets) = (0..dd.n_features())
            .map(|i| {
                let f = dd.feature(i);
                (entropy(f), alphabet(f))
            })
            .unzip();
        let n = dd.n_instances() as f64;
        let terms = (0..=dd.n_instances())
            .map(|c| {
                let p = c as f64 / n;
                if c == 0 {
                    0.0
                } else {
                    -p * libm::log2(p)
                }
            })
            .collect();
        Self {
            dd,
            entropies,
            alphabets,
            terms,
        }
    }

    pub fn dataset(&self) -> &'a DiscretizedDataset {
        self.dd
    }

    pub fn n_features(&self) -> usize {
        self.dd.n_features()
    }

    pub fn entropy(&self, i: usize) -> f64 {
        self.entropies[i]
    }

    /// `H(f_i, f_j)` with the lower index as the major axis, so the value is
    /// exactly symmetric in `(i, j)`.
    pub fn joint_entropy(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let (a, b) = (self.dd.feature(i), self.dd.feature(j));
        let (ka, kb) = (self.alphabets[i], self.alphabets[j]);
        const STACK: usize = 64;
        if a.is_empty() || ka * kb > STACK {
            return joint_entropy_sized(a, b, ka, kb);
        }
        // Same terms in the same order as `entropy_of_counts`, so the result
        // is bit-identical, minus the per-cell logarithms.
        let mut counts = [0u32; STACK];
        for (&x, &y) in a.iter().zip(b) {
            counts[usize::from(x) * kb + usize::from(y)] += 1;
        }
        let mut h = 0.0;
        for &c in &counts[..ka * kb] {
            if c > 0 {
                h += self.terms[c as usize];
            }
        }
        h.max(0.0)
    }

    pub fn mutual_information(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.entropies[i];
        }
        let hab = self.joint_entropy(i, j);
        (self.entropies[i] + self.entropies[j] - hab).max(0.0)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let hab = self.joint_entropy(i, j);
        distance_from_entropies(self.entropies[i], self.entropies[j], hab)
    }

    /// Entry `Q_ij` under the chosen redundancy measure.
    pub fn redundancy(&self, i: usize, j: usize, kind: Redundancy) -> f64 {
        match kind {
            Redundancy::MutualInformation => self.mutual_information(i, j),
            Redundancy::NormalizedSimilarity => 1.0 - self.distance(i, j),
        }
    }

    /// `MI(f_i, labels)`.
    pub fn relevance<L: Code>(&self, i: usize, labels: &[L]) -> f64 {
        let f = self.dd.feature(i);
        let hab = joint_entropy_sized(f, labels, self.alphabets[i], alphabet(labels));
        (self.entropies[i] + entropy(labels) - hab).max(0.0)
    }
}

/// Computes `Q` (upper triangle, mirrored), `s` and `θ` from discretized
/// features and class labels.
pub fn build_similarity<L: Code>(
    dd: &DiscretizedDataset,
    labels: &[L],
    kind: Redundancy,
) -> Result<SimilarityModel> {
    check_len(dd.n_instances(), labels.len())?;
    let m = dd.n_features();
    let pw = PairwiseMi::new(dd);
    let mut q = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = pw.redundancy(i, j, kind);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    let s = (0..m).map(|i| pw.relevance(i, labels)).collect();
    SimilarityModel::from_parts(q, s)
}

/// `Q′ = (1 − θ)·Q`, `s′ = θ·s`, with `θ` from the override or the model.
pub fn scale_for_theta(
    sm: &SimilarityModel,
    theta_override: Option<f64>,
) -> Result<(Matrix, Vec<f64>)> {
    let theta = theta_override.unwrap_or(sm.theta);
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param("theta", format!("{theta} is outside [0, 1]")));
    }
    Ok((
        sm.q.scaled(1.0 - theta),
        sm.s.iter().map(|v| theta * v).collect(),
    ))
}
