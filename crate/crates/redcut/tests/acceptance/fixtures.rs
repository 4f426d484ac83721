//! Synthetic data with known structure.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use redcut_core::clustering::FeatureSpace;
use redcut_core::dataset::{Dataset, DiscretizedDataset};
use redcut_core::linalg::Matrix;

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `BᵀB / r` with `B` an `r × m` matrix of uniform entries; rank `min(r, m)`.
pub fn random_psd(rng: &mut ChaCha8Rng, m: usize, r: usize) -> Matrix {
    let b: Vec<f64> = (0..r * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let scale = r.max(1) as f64;
    Matrix::from_fn(m, m, |i, j| {
        (0..r).map(|t| b[t * m + i] * b[t * m + j]).sum::<f64>() / scale
    })
}

pub fn random_nonneg(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(0.0..1.0)).collect()
}

/// Balanced binary labels in random order.
pub fn binary_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut y: Vec<usize> = (0..n).map(|j| j % 2).collect();
    y.shuffle(rng);
    y
}

fn dataset(name: &str, rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Dataset {
    let m = rows.len();
    let n = labels.len();
    Dataset::new(
        name,
        Matrix::from_row_major(m, n, rows.concat()),
        labels,
        None,
    )
    .unwrap()
}

pub struct Planted {
    pub data: Dataset,
    /// Column of each informative feature.
    pub informative: Vec<usize>,
}

/// `n_inf` label-dependent features (class means `±shift`), `copies` copies
/// of each with added noise of scale `copy_noise`, and
/// `n_noise` label-independent features, in shuffled column order.
pub fn planted(
    rng: &mut ChaCha8Rng,
    n_inf: usize,
    copies: usize,
    n_noise: usize,
    n: usize,
    shift: f64,
    copy_noise: f64,
) -> Planted {
    let y = binary_labels(rng, n);
    let sign: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut kind = Vec::new();
    for i in 0..n_inf {
        let shift = shift + 0.05 * i as f64;
        let base: Vec<f64> = sign.iter().map(|s| s * shift + normal(rng)).collect();
        for _ in 0..copies {
            rows.push(base.iter().map(|v| v + copy_noise * normal(rng)).collect());
            kind.push(false);
        }
        rows.push(base);
        kind.push(true);
    }
    for _ in 0..n_noise {
        rows.push((0..n).map(|_| normal(rng)).collect());
        kind.push(false);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(rng);
    let rows: Vec<Vec<f64>> = order.iter().map(|&o| rows[o].clone()).collect();
    let informative = order
        .iter()
        .enumerate()
        .filter(|(_, &o)| kind[o])
        .map(|(col, _)| col)
        .collect();
    Planted {
        data: dataset("planted", rows, y),
        informative,
    }
}

/// `groups` latent factors with `per_group` noisy observations each, in
/// shuffled order; the label follows the first three factors.
pub fn grouped(
    rng: &mut ChaCha8Rng,
    groups: usize,
    per_group: usize,
    n: usize,
    noise: f64,
) -> Dataset {
    let latent: Vec<Vec<f64>> = (0..groups)
        .map(|_| (0..n).map(|_| normal(rng)).collect())
        .collect();
    let mut y: Vec<usize> = (0..n)
        .map(|j| {
            let score: f64 = latent.iter().take(3).map(|z| z[j]).sum::<f64>() + 0.3 * normal(rng);
            usize::from(score > 0.0)
        })
        .collect();
    if y.iter().all(|&l| l == y[0]) {
        y[0] = 1 - y[0];
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(groups * per_group);
    for z in &latent {
        for _ in 0..per_group {
            rows.push(z.iter().map(|v| v + noise * normal(rng)).collect());
        }
    }
    rows.shuffle(rng);
    dataset("grouped", rows, y)
}

/// Codes drawn around a few prototypes so distances span the full range.
pub fn random_codes(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DiscretizedDataset {
    let protos = rng.random_range(1..=4usize);
    let prototypes: Vec<Vec<u8>> = (0..protos)
        .map(|_| (0..n).map(|_| rng.random_range(0..3u8)).collect())
        .collect();
    let mut codes = Vec::with_capacity(m * n);
    for _ in 0..m {
        let p = &prototypes[rng.random_range(0..protos)];
        let flip = rng.random_range(0.0..1.0);
        for &c in p {
            codes.push(if rng.random_bool(flip) {
                rng.random_range(0..3u8)
            } else {
                c
            });
        }
    }
    DiscretizedDataset::from_codes(m, n, codes).unwrap()
}

/// Random labels over `classes` classes with each class present.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, classes: usize) -> Vec<usize> {
    let mut y: Vec<usize> = (0..n)
        .map(|j| {
            if j < classes {
                j
            } else {
                rng.random_range(0..classes)
            }
        })
        .collect();
    y.shuffle(rng);
    y
}

/// Features as points in `R^dim` under the Euclidean distance.
pub struct PointSpace {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
}

impl FeatureSpace for PointSpace {
    fn n_features(&self) -> usize {
        self.points.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.sq_dist_to(i, &self.points[j]).sqrt()
    }

    fn accumulate(&self, i: usize, acc: &mut [f64]) {
        for (a, p) in acc.iter_mut().zip(&self.points[i]) {
            *a += p;
        }
    }

    fn sq_dist_to(&self, i: usize, point: &[f64]) -> f64 {
        self.points[i]
            .iter()
            .zip(point)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// The `(base^depth)^dim` points of a cubic grid, `base` odd, ordered so that
/// k-means with `k = base^dim` seeded on the first `k` members of any nested
/// box splits it exactly into its `k` congruent sub-boxes.
///
/// A point's key is the shallowest nesting level at which it is a box
/// centre; inside a box of level `t` the members of key `≤ t + 1` are
/// exactly the centres of its sub-boxes.
pub fn nested_grid(dim: usize, base: usize, depth: usize, spacing: f64) -> PointSpace {
    let side = base.pow(depth as u32);
    let key = |p: &[usize]| {
        (0..=depth)
            .find(|&t| {
                let w = base.pow((depth - t) as u32);
                p.iter().all(|&x| x % w == (w - 1) / 2)
            })
            .unwrap()
    };
    let mut cells: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..dim {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                (0..side).map(move |x| {
                    let mut c = c.clone();
                    c.push(x);
                    c
                })
            })
            .collect();
    }
    cells.sort_by_key(|c| key(c));
    PointSpace {
        dim,
        points: cells
            .into_iter()
            .map(|c| c.into_iter().map(|x| x as f64 * spacing).collect())
            .collect(),
    }
}
