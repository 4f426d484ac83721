//! Simplex-constrained quadratic programs `min ½αᵀQα − sᵀα`, `α ≥ 0`,
//! `Σα = 1`, certified by a KKT residual.
//!
//! The solver is projected gradient with Barzilai–Borwein trial steps and an
//! exact line search along the projected direction, so the objective never
//! increases. Whenever the support has settled it also tries an active-set
//! step: solve the equality-constrained problem on the support and move
//! towards it as far as feasibility allows. On well-posed instances that step
//! lands on the optimum to machine precision.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, lu_solve, norm_inf, Matrix};
use crate::{Error, Result, ZERO_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpOptions {
    /// Target KKT residual.
    pub tol: f64,
    /// Iteration cap; `None` means `50·M + 1000`.
    pub max_iter: Option<usize>,
    /// Weights at or below this count as zero when judging the support.
    pub zero_tol: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: None,
            zero_tol: ZERO_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub support: Vec<usize>,
    /// Diagonal shift added to make a non-convex instance solvable; zero
    /// when none was needed. `objective` excludes the shift.
    pub diagonal_shift: f64,
}

/// `½·q_scale·αᵀQα + ½·shift·‖α‖² − s_scale·sᵀα`.
#[derive(Clone, Copy)]
struct Problem<'a> {
    q: &'a Matrix,
    s: &'a [f64],
    q_scale: f64,
    s_scale: f64,
    shift: f64,
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        self.s.len()
    }

    fn qx(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.q.mul_vec(x);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.q_scale * *o + self.shift * xi;
        }
        out
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.qx(x);
        for (gi, si) in g.iter_mut().zip(self.s) {
            *gi -= self.s_scale * si;
        }
        g
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let qx = self.qx(x);
        0.5 * dot(x, &qx) - self.s_scale * dot(self.s, x)
    }

    /// Objective without the diagonal shift.
    fn base_objective(&self, x: &[f64]) -> f64 {
        let unshifted = Problem {
            shift: 0.0,
            ..*self
        };
        unshifted.objective(x)
    }

    /// Minimizer of the objective restricted to `{α : α_i = 0 off support,
    /// Σα = 1}`, if the reduced KKT system is solvable.
    fn face_minimizer(&self, support: &[usize]) -> Option<Vec<f64>> {
        let k = support.len();
        let mut kkt = Matrix::zeros(k + 1, k + 1);
        let mut rhs = vec![0.0; k + 1];
        let mut scale = 0.0f64;
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                let v = self.q_scale * self.q[(i, j)] + if a == b { self.shift } else { 0.0 };
                kkt[(a, b)] = v;
                scale = scale.max(v.abs());
            }
            kkt[(a, k)] = -1.0;
            kkt[(k, a)] = 1.0;
            rhs[a] = self.s_scale * self.s[i];
        }
        rhs[k] = 1.0;
        let sol = lu_solve(&kkt, &rhs, 1e-13).or_else(|| {
            // Singular faces (duplicate features, linear objectives): a tiny
            // ridge picks the minimum-norm minimizer.
            let ridge = 1e-11 * scale.max(1e-300);
            for a in 0..k {
                kkt[(a, a)] += ridge;
            }
            lu_solve(&kkt, &rhs, 1e-15)
        })?;
        let mut full = vec![0.0; self.dim()];
        for (a, &i) in support.iter().enumerate() {
            full[i] = sol[a];
        }
        full.iter().all(|v| v.is_finite()).then_some(full)
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let mut cumsum = 0.0;
    let mut shift = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            shift = t;
        }
    }
    let mut x: Vec<f64> = v.iter().map(|&vi| (vi - shift).max(0.0)).collect();
    let sum: f64 = x.iter().sum();
    if sum > 0.0 && sum != 1.0 {
        for xi in &mut x {
            *xi /= sum;
        }
    }
    x
}

/// KKT residual at a feasible `alpha` for gradient `g`: with `λ` the smallest
/// gradient entry on the support, the worst of `|g_i − λ|` on the support and
/// `max(0, λ − g_i)` off it.
pub fn kkt_residual_from_gradient(g: &[f64], alpha: &[f64], zero_tol: f64) -> f64 {
    let lambda = g
        .iter()
        .zip(alpha)
        .filter(|(_, &a)| a > zero_tol)
        .map(|(&gi, _)| gi)
        .fold(f64::INFINITY, f64::min);
    if !lambda.is_finite() {
        return f64::INFINITY;
    }
    g.iter().zip(alpha).fold(0.0f64, |worst, (&gi, &a)| {
        let r = if a > zero_tol {
            (gi - lambda).abs()
        } else {
            (lambda - gi).max(0.0)
        };
        worst.max(r)
    })
}

/// KKT residual of `alpha` for `min ½αᵀQα − sᵀα` on the simplex.
pub fn kkt_residual(q: &Matrix, s: &[f64], alpha: &[f64], zero_tol: f64) -> f64 {
    let mut g = q.mul_vec(alpha);
    for (gi, si) in g.iter_mut().zip(s) {
        *gi -= si;
    }
    kkt_residual_from_gradient(&g, alpha, zero_tol)
}

fn support_of(x: &[f64], zero_tol: f64) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, &v)| v > zero_tol)
        .map(|(i, _)| i)
        .collect()
}

fn validate(q: &Matrix, s: &[f64], opts: &QpOptions) -> Result<()> {
    if !q.is_square() || q.rows() != s.len() {
        return Err(Error::Shape(format!(
            "Q is {}×{} but s has {} entries",
            q.rows(),
            q.cols(),
            s.len()
        )));
    }
    if s.is_empty() {
        return Err(Error::Shape("empty problem".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if q.as_slice().iter().chain(s).any(|v| !v.is_finite()) {
        return Err(Error::param("Q, s", "entries must be finite"));
    }
    let asym = q.max_asymmetry();
    if asym > 1e-8 {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

struct Outcome {
    x: Vec<f64>,
    residual: f64,
    iterations: usize,
    converged: bool,
    negative_curvature: bool,
}

fn run(p: &Problem<'_>, opts: &QpOptions, observer: &mut dyn FnMut(usize, f64)) -> Outcome {
    let m = p.dim();
    let mut x = vec![1.0 / m as f64; m];
    let mut g = p.gradient(&x);
    let mut f = p.objective(&x);
    observer(0, f);

    let q_norm = norm_inf(p.q.as_slice()) * p.q_scale.abs() + p.shift;
    let mut step = if q_norm > 0.0 {
        1.0 / q_norm
    } else {
        f64::INFINITY
    };
    let mut last_support: Vec<usize> = Vec::new();
    let mut tried_support: Option<Vec<usize>> = None;
    let mut negative_curvature = false;
    let mut residual = kkt_residual_from_gradient(&g, &x, opts.zero_tol);
    let max_iter = opts.max_iter.unwrap_or(50 * m + 1000);

    for iter in 1..=max_iter {
        if residual <= opts.tol {
            return Outcome {
                x,
                residual,
                iterations: iter - 1,
                converged: true,
                negative_curvature,
            };
        }

        let support = support_of(&x, opts.zero_tol);
        if support == last_support && tried_support.as_ref() != Some(&support) {
            tried_support = Some(support.clone());
            if let Some(z) = p.face_minimizer(&support) {
                let dir: Vec<f64> = z.iter().zip(&x).map(|(zi, xi)| zi - xi).collect();
                let reach = z
                    .iter()
                    .zip(&x)
                    .filter(|(&zi, _)| zi < 0.0)
                    .map(|(&zi, &xi)| xi / (xi - zi))
                    .fold(1.0f64, f64::min);
                let mut cand: Vec<f64> =
                    x.iter().zip(&dir).map(|(xi, di)| xi + reach * di).collect();
                for c in &mut cand {
                    if *c < 0.0 {
                        *c = 0.0;
                    }
                }
                let sum: f64 = cand.iter().sum();
                if sum > 0.0 {
                    for c in &mut cand {
                        *c /= sum;
                    }
                    let fc = p.objective(&cand);
                    if fc <= f {
                        x = cand;
                        f = fc;
                        g = p.gradient(&x);
                        residual = kkt_residual_from_gradient(&g, &x, opts.zero_tol);
                        observer(iter, f);
                        if residual <= opts.tol {
                            return Outcome {
                                x,
                                residual,
                                iterations: iter,
                                converged: true,
                                negative_curvature,
                            };
                        }
                    }
                }
            }
        }
        last_support = support;

        let g_scale = norm_inf(&g).max(1e-300);
        let t = if step.is_finite() && step > 0.0 {
            step.min(10.0 / g_scale)
        } else {
            10.0 / g_scale
        };
        let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
        let proj = project_simplex(&trial);
        let d: Vec<f64> = proj.iter().zip(&x).map(|(pi, xi)| pi - xi).collect();
        if norm_inf(&d) == 0.0 {
            // Fixed point of the projected-gradient map.
            residual = kkt_residual_from_gradient(&g, &x, opts.zero_tol);
            if residual <= opts.tol {
                continue;
            }
            step = t * 0.5;
            continue;
        }
        let qd = p.qx(&d);
        let curvature = dot(&d, &qd);
        let slope = dot(&g, &d);
        if slope >= 0.0 {
            // No descent along the projected direction; retry with a smaller
            // trial step.
            step = t * 0.25;
            if t < 1e-300 {
                break;
            }
            continue;
        }
        if curvature < 0.0 {
            negative_curvature = true;
        }
        let gamma = if curvature > 0.0 {
            (-slope / curvature).min(1.0)
        } else {
            1.0
        };
        let mut next: Vec<f64> = x
            .iter()
            .zip(&d)
            .map(|(xi, di)| (xi + gamma * di).max(0.0))
            .collect();
        if gamma == 1.0 {
            next.clone_from(&proj);
        }
        let f_next = p.objective(&next);
        if f_next > f {
            step = t * 0.25;
            continue;
        }
        let s_k: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        let g_next = p.gradient(&next);
        let y_k: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s_k, &y_k);
        let ss = dot(&s_k, &s_k);
        step = if sy > 0.0 { ss / sy } else { f64::INFINITY };

        x = next;
        g = g_next;
        f = f_next;
        residual = kkt_residual_from_gradient(&g, &x, opts.zero_tol);
        observer(iter, f);
    }
    Outcome {
        converged: residual <= opts.tol,
        x,
        residual,
        iterations: max_iter,
        negative_curvature,
    }
}

/// Most negative eigenvalue estimate of `q_scale·Q` by power iteration on a
/// shifted matrix; returns zero when the matrix looks PSD.
fn min_eigenvalue_estimate(q: &Matrix, q_scale: f64) -> f64 {
    let n = q.rows();
    let bound = norm_inf(q.as_slice()) * q_scale.abs() * n as f64;
    if bound == 0.0 {
        return 0.0;
    }
    // Power iteration on (bound·I − Q) converges to bound − λ_min.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) * 1e-3).collect();
    let mut mu = 0.0;
    for _ in 0..500 {
        let qv = q.mul_vec(&v);
        let w: Vec<f64> = v
            .iter()
            .zip(&qv)
            .map(|(vi, qi)| bound * vi - q_scale * qi)
            .collect();
        let norm = libm::sqrt(dot(&w, &w));
        if norm == 0.0 {
            break;
        }
        mu = dot(&v, &w) / dot(&v, &v);
        v = w.iter().map(|wi| wi / norm).collect();
    }
    (bound - mu).min(0.0)
}

fn solve_problem(
    p: Problem<'_>,
    opts: &QpOptions,
    observer: &mut dyn FnMut(usize, f64),
) -> Result<SimplexSolution> {
    validate(p.q, p.s, opts)?;
    let mut out = run(&p, opts, observer);
    let mut shift = 0.0;
    if !out.converged && out.negative_curvature {
        shift = -min_eigenvalue_estimate(p.q, p.q_scale) + 1e-10;
        let shifted = Problem { shift, ..p };
        let retry = run(&shifted, opts, observer);
        if retry.converged || retry.residual < out.residual {
            out = retry;
        } else {
            shift = 0.0;
        }
    }
    if !out.converged {
        return Err(Error::NotConverged {
            iterations: out.iterations,
            residual: out.residual,
            best: out.x,
        });
    }
    Ok(SimplexSolution {
        objective: p.base_objective(&out.x),
        support: support_of(&out.x, opts.zero_tol),
        alpha: out.x,
        kkt_residual: out.residual,
        iterations: out.iterations,
        diagonal_shift: shift,
    })
}

/// Solves `min ½αᵀQα − sᵀα` over the simplex.
pub fn solve_simplex_qp(q: &Matrix, s: &[f64], opts: &QpOptions) -> Result<SimplexSolution> {
    solve_simplex_qp_observed(q, s, opts, &mut |_, _| {})
}

/// As [`solve_simplex_qp`], calling `observer(iteration, objective)` after
/// every accepted iterate.
pub fn solve_simplex_qp_observed(
    q: &Matrix,
    s: &[f64],
    opts: &QpOptions,
    observer: &mut dyn FnMut(usize, f64),
) -> Result<SimplexSolution> {
    let p = Problem {
        q,
        s,
        q_scale: 1.0,
        s_scale: 1.0,
        shift: 0.0,
    };
    solve_problem(p, opts, observer)
}

/// Solves `min ½(1 − θ)αᵀQα − θ·sᵀα` over the simplex without materializing
/// the scaled inputs.
pub fn solve_weighted_qp(
    q: &Matrix,
    s: &[f64],
    theta: f64,
    opts: &QpOptions,
) -> Result<SimplexSolution> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param("theta", format!("{theta} is outside [0, 1]")));
    }
    let p = Problem {
        q,
        s,
        q_scale: 1.0 - theta,
        s_scale: theta,
        shift: 0.0,
    };
    solve_problem(p, opts, &mut |_, _| {})
}

/// Feature order by weight: descending `alpha`, ties by descending `s`, then
/// ascending index. Weights at or below the zero threshold rank after every
/// positive weight, ordered by `s`.
pub fn rank_by_alpha(alpha: &[f64], s: &[f64]) -> Vec<usize> {
    assert_eq!(alpha.len(), s.len(), "alpha and s must align");
    let key = |i: usize| if alpha[i] > ZERO_TOL { alpha[i] } else { 0.0 };
    let mut idx: Vec<usize> = (0..alpha.len()).collect();
    idx.sort_by(|&a, &b| {
        key(b)
            .total_cmp(&key(a))
            .then(s[b].total_cmp(&s[a]))
            .then(a.cmp(&b))
    });
    idx
}
