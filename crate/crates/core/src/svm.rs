//! L2-regularized squared-hinge linear classifier trained in the primal.
//!
//! Minimizes `½‖w‖² + C·Σ max(0, 1 − y_i(wᵀx_i + b))²` with a truncated
//! Newton method: conjugate gradient on the generalized Hessian for the
//! step, backtracking for the step length. The bias is not regularized.
//! More than two classes are handled one-vs-rest.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::dot;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmOptions {
    pub c: f64,
    /// Stop when `‖∇f‖ ≤ tol · max(1, ‖∇f(0)‖)`.
    pub tol: f64,
    pub max_newton: usize,
    pub max_cg: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-6,
            max_newton: 100,
            max_cg: 250,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BinaryModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

/// A trained classifier. With two classes `models` holds one scorer whose
/// positive side is `classes[1]`; otherwise one scorer per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub classes: Vec<usize>,
    pub models: Vec<BinaryModel>,
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.models[0].weights.len()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        if self.classes.len() == 2 {
            return if self.models[0].score(x) > 0.0 {
                self.classes[1]
            } else {
                self.classes[0]
            };
        }
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (c, m) in self.models.iter().enumerate() {
            let s = m.score(x);
            if s > best_score {
                best = c;
                best_score = s;
            }
        }
        self.classes[best]
    }
}

/// Objective at `params = [w…, b]` for ±1 targets.
pub fn objective(params: &[f64], x: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    let d = params.len() - 1;
    let (w, b) = (&params[..d], params[d]);
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| {
            let xi_margin = 1.0 - yi * (dot(w, xi) + b);
            if xi_margin > 0.0 {
                xi_margin * xi_margin
            } else {
                0.0
            }
        })
        .sum();
    0.5 * dot(w, w) + c * loss
}

/// Gradient of [`objective`], `[∇w…, ∂b]`.
pub fn gradient(params: &[f64], x: &[Vec<f64>], y: &[f64], c: f64) -> Vec<f64> {
    let d = params.len() - 1;
    let (w, b) = (&params[..d], params[d]);
    let mut g = params.to_vec();
    g[d] = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let margin = 1.0 - yi * (dot(w, xi) + b);
        if margin > 0.0 {
            let f = -2.0 * c * yi * margin;
            for (gj, xj) in g[..d].iter_mut().zip(xi) {
                *gj += f * xj;
            }
            g[d] += f;
        }
    }
    g
}

/// Generalized Hessian-vector product on the active set.
fn hess_vec(v: &[f64], x: &[Vec<f64>], active: &[usize], c: f64) -> Vec<f64> {
    let d = v.len() - 1;
    let mut out = v.to_vec();
    out[d] = 1e-10 * v[d];
    for &i in active {
        let xv = dot(&x[i], &v[..d]) + v[d];
        let f = 2.0 * c * xv;
        for (oj, xj) in out[..d].iter_mut().zip(&x[i]) {
            *oj += f * xj;
        }
        out[d] += f;
    }
    out
}

fn train_binary(x: &[Vec<f64>], y: &[f64], d: usize, opts: &SvmOptions) -> BinaryModel {
    let mut p = vec![0.0; d + 1];
    let mut f = objective(&p, x, y, opts.c);
    let g0 = gradient(&p, x, y, opts.c);
    let stop = opts.tol * libm::sqrt(dot(&g0, &g0)).max(1.0);

    for _ in 0..opts.max_newton {
        let g = gradient(&p, x, y, opts.c);
        let gnorm = libm::sqrt(dot(&g, &g));
        if gnorm <= stop {
            break;
        }
        let w = &p[..d];
        let active: Vec<usize> = (0..x.len())
            .filter(|&i| 1.0 - y[i] * (dot(w, &x[i]) + p[d]) > 0.0)
            .collect();

        // CG on H·step = −g
        let mut step = vec![0.0; d + 1];
        let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut dir = r.clone();
        let mut rr = dot(&r, &r);
        let cg_tol = (0.1 * gnorm).min(libm::sqrt(gnorm)) * gnorm;
        for _ in 0..opts.max_cg {
            if rr <= cg_tol * cg_tol {
                break;
            }
            let hd = hess_vec(&dir, x, &active, opts.c);
            let curv = dot(&dir, &hd);
            if curv <= 0.0 {
                break;
            }
            let a = rr / curv;
            for j in 0..=d {
                step[j] += a * dir[j];
                r[j] -= a * hd[j];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for j in 0..=d {
                dir[j] = r[j] + beta * dir[j];
            }
        }
        if dot(&step, &step) == 0.0 {
            step = g.iter().map(|v| -v).collect();
        }

        let slope = dot(&g, &step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = p.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let fc = objective(&cand, x, y, opts.c);
            if fc <= f + 1e-4 * t * slope {
                p = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let bias = p[d];
    p.truncate(d);
    BinaryModel { weights: p, bias }
}

/// Trains on instance-major rows `x` with class ids `y`.
pub fn train_linear(x: &[Vec<f64>], y: &[usize], opts: &SvmOptions) -> Result<LinearModel> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if !(opts.c > 0.0) {
        return Err(Error::param("C", "must be positive"));
    }
    let d = x.first().map_or(0, |r| r.len());
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("rows have differing lengths".into()));
    }
    let mut classes: Vec<usize> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels(
            "training data contains a single class".into(),
        ));
    }
    let targets = |positive: usize| -> Vec<f64> {
        y.iter()
            .map(|&l| if l == positive { 1.0 } else { -1.0 })
            .collect()
    };
    let models = if classes.len() == 2 {
        vec![train_binary(x, &targets(classes[1]), d, opts)]
    } else {
        classes
            .iter()
            .map(|&c| train_binary(x, &targets(c), d, opts))
            .collect()
    };
    Ok(LinearModel { classes, models })
}

/// Percentage of misclassified instances.
pub fn error_rate(model: &LinearModel, x: &[Vec<f64>], y: &[usize]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let wrong = x
        .iter()
        .zip(y)
        .filter(|(xi, &yi)| model.predict(xi) != yi)
        .count();
    100.0 * wrong as f64 / y.len() as f64
}
