//! Feature-selection pipelines: plain QPFS and its three clustering-accelerated
//! variants.
//!
//! All pipelines read `Q` and `s` from one precomputed [`SimilarityModel`];
//! clustered variants restrict it to the representatives they pick rather
//! than re-estimating mutual information.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::clustering::{
    cluster_radius, tlkm, variant_macqueen, DistanceCounter, FeatureCluster, FeatureSpace,
};
use crate::infotheory::{scale_for_theta, SimilarityModel};
use crate::qp::{rank_by_alpha, solve_simplex_qp, QpOptions};
use crate::{Error, Result, ZERO_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "QPFS")]
    Qpfs,
    #[serde(rename = "TLKM-QPFS")]
    TlkmQpfs,
    #[serde(rename = "IKM-QPFS")]
    IkmQpfs,
    #[serde(rename = "IKMA-QPFS")]
    IkmaQpfs,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Qpfs,
        Method::TlkmQpfs,
        Method::IkmQpfs,
        Method::IkmaQpfs,
    ];

    /// Short command-line name.
    pub fn short_name(self) -> &'static str {
        match self {
            Method::Qpfs => "qpfs",
            Method::TlkmQpfs => "tlkm",
            Method::IkmQpfs => "ikm",
            Method::IkmaQpfs => "ikma",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Qpfs => "QPFS",
            Method::TlkmQpfs => "TLKM-QPFS",
            Method::IkmQpfs => "IKM-QPFS",
            Method::IkmaQpfs => "IKMA-QPFS",
        }
    }

    pub fn is_clustered(self) -> bool {
        self != Method::Qpfs
    }
}

impl core::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.short_name().eq_ignore_ascii_case(s) || m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param("method", format!("unknown method `{s}`")))
    }
}

/// Options shared by every pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorOptions {
    /// Fixed `θ` for every QP; `None` derives it from the similarity means.
    pub theta_override: Option<f64>,
    /// Reuse the top-level `θ` for the QPs solved inside refinement instead
    /// of recomputing it from each restricted sub-model.
    pub freeze_theta: bool,
    pub qp: QpOptions,
    /// Largest surviving feature set the final QP may receive.
    pub survivor_cap: usize,
}

impl Default for SelectorOptions {
    fn default() -> Self {
        Self {
            theta_override: None,
            freeze_theta: false,
            qp: QpOptions::default(),
            survivor_cap: 5000,
        }
    }
}

/// Parameters of interleaved refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrrParams {
    /// Sub-clusters per split.
    pub k: usize,
    /// Clusters with radius below this are not split further.
    pub tau: f64,
    /// Maximum number of interleaved levels.
    pub levels: usize,
    pub zero_tol: f64,
    /// Drop every cluster whose representative gets zero weight.
    pub aggressive: bool,
    /// Cluster count of the initial k-means; defaults to `k`.
    pub initial_clusters: Option<usize>,
}

impl IrrParams {
    pub fn new(k: usize, tau: f64, levels: usize) -> Self {
        Self {
            k,
            tau,
            levels,
            zero_tol: ZERO_TOL,
            aggressive: false,
            initial_clusters: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::param(
                "k",
                format!("{} sub-clusters; need at least 2", self.k),
            ));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::param(
                "tau",
                format!("{} is outside (0, 1]", self.tau),
            ));
        }
        if self.levels == 0 {
            return Err(Error::param("levels", "must be at least 1"));
        }
        if !(self.zero_tol >= 0.0) {
            return Err(Error::param("zero_tol", "must be nonnegative"));
        }
        if self.initial_clusters == Some(0) {
            return Err(Error::param("k_init", "must be at least 1"));
        }
        Ok(())
    }
}

/// Parameters a run used, echoed into its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub theta: f64,
    pub theta_fixed: bool,
    pub freeze_theta: bool,
    pub k: Option<usize>,
    pub k_init: Option<usize>,
    pub tau: Option<f64>,
    pub levels: Option<usize>,
    pub qp_tol: f64,
    pub zero_tol: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Instrumentation {
    /// All metric evaluations: k-means plus radius checks.
    pub distance_count: u64,
    pub kmeans_distance_count: u64,
    pub radius_distance_count: u64,
    pub qp_calls: usize,
    pub qp_sizes: Vec<usize>,
    pub levels_used: usize,
    pub discarded_cluster_count: usize,
    /// Level at which each aggressive discard happened.
    pub discard_levels: Vec<usize>,
    /// Representatives of the finest clustering reached; empty for QPFS.
    pub representatives: Vec<usize>,
    /// Selector wall time, filled in by callers that can read a clock.
    pub wall_time_secs: Option<f64>,
}

impl Instrumentation {
    pub fn max_qp_size(&self) -> usize {
        self.qp_sizes.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: Method,
    pub ranked: Vec<usize>,
    /// Weight of each ranked feature, non-increasing.
    pub scores: Vec<f64>,
    pub params: SelectionParams,
    pub instrumentation: Instrumentation,
}

/// The first `min(k, |ranked|)` features.
pub fn top_k(result: &SelectionResult, k: usize) -> Vec<usize> {
    result.ranked.iter().take(k).copied().collect()
}

fn top_theta(sim: &SimilarityModel, opts: &SelectorOptions) -> Result<f64> {
    let theta = opts.theta_override.unwrap_or(sim.theta());
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param("theta", format!("{theta} is outside [0, 1]")));
    }
    Ok(theta)
}

/// Solves QPFS on the features `idx` (all features when `None`) and returns
/// `(ranked feature ids, weights in ranked order)`.
fn rank_subset(
    sim: &SimilarityModel,
    idx: Option<&[usize]>,
    theta: ThetaRule,
    opts: &SelectorOptions,
    instr: &mut Instrumentation,
) -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let restricted;
    let (model, ids): (&SimilarityModel, Vec<usize>) = match idx {
        Some(idx) => {
            restricted = sim.restrict(idx);
            (&restricted, idx.to_vec())
        }
        None => (sim, (0..sim.n_features()).collect()),
    };
    let theta = match theta {
        ThetaRule::Fixed(t) => t,
        ThetaRule::SubModel => model.theta(),
    };
    let (q, s) = scale_for_theta(model, Some(theta))?;
    let sol = solve_simplex_qp(&q, &s, &opts.qp)?;
    instr.qp_calls += 1;
    instr.qp_sizes.push(ids.len());
    let order = rank_by_alpha(&sol.alpha, model.s());
    let ranked = order.iter().map(|&o| ids[o]).collect();
    let scores = order.iter().map(|&o| sol.alpha[o]).collect();
    Ok((ranked, scores, sol.alpha))
}

#[derive(Clone, Copy)]
enum ThetaRule {
    Fixed(f64),
    SubModel,
}

fn base_params(theta: f64, opts: &SelectorOptions) -> SelectionParams {
    SelectionParams {
        theta,
        theta_fixed: opts.theta_override.is_some(),
        freeze_theta: opts.freeze_theta,
        k: None,
        k_init: None,
        tau: None,
        levels: None,
        qp_tol: opts.qp.tol,
        zero_tol: opts.qp.zero_tol,
        seed: None,
    }
}

/// Plain QPFS: one QP over all `M` features, ranking every feature.
pub fn qpfs(sim: &SimilarityModel, opts: &SelectorOptions) -> Result<SelectionResult> {
    let theta = top_theta(sim, opts)?;
    let mut instr = Instrumentation::default();
    let (ranked, scores, _) = rank_subset(sim, None, ThetaRule::Fixed(theta), opts, &mut instr)?;
    instr.levels_used = 0;
    Ok(SelectionResult {
        method: Method::Qpfs,
        ranked,
        scores,
        params: base_params(theta, opts),
        instrumentation: instr,
    })
}

/// Two-level k-means over all features, then QPFS on the representatives.
pub fn tlkm_qpfs<S: FeatureSpace>(
    space: &S,
    sim: &SimilarityModel,
    k_init: usize,
    tau: f64,
    opts: &SelectorOptions,
) -> Result<SelectionResult> {
    check_aligned(space, sim)?;
    let theta = top_theta(sim, opts)?;
    let features: Vec<usize> = (0..space.n_features()).collect();
    let counter = DistanceCounter::new();
    let clustering = tlkm(space, &features, k_init, tau, &counter)?;
    let reps = clustering.representatives();

    let mut instr = Instrumentation {
        distance_count: clustering.distance_count,
        kmeans_distance_count: clustering.level_counts.iter().sum(),
        radius_distance_count: clustering.radius_count,
        levels_used: if clustering.level_counts[1] > 0 { 2 } else { 1 },
        representatives: reps.clone(),
        ..Instrumentation::default()
    };
    let (ranked, scores, _) =
        rank_subset(sim, Some(&reps), ThetaRule::Fixed(theta), opts, &mut instr)?;
    let mut params = base_params(theta, opts);
    params.k_init = Some(k_init);
    params.tau = Some(tau);
    Ok(SelectionResult {
        method: Method::TlkmQpfs,
        ranked,
        scores,
        params,
        instrumentation: instr,
    })
}

fn check_aligned<S: FeatureSpace>(space: &S, sim: &SimilarityModel) -> Result<()> {
    if space.n_features() != sim.n_features() {
        return Err(Error::Shape(format!(
            "feature space has {} features, similarity model {}",
            space.n_features(),
            sim.n_features()
        )));
    }
    if space.n_features() == 0 {
        return Err(Error::Shape("no features".into()));
    }
    Ok(())
}

/// Result of one refinement sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IrrOutcome {
    /// Surviving representatives, in cluster order.
    pub survivors: Vec<usize>,
    pub instrumentation: Instrumentation,
}

struct Refiner<'a, S> {
    space: &'a S,
    sim: &'a SimilarityModel,
    params: IrrParams,
    opts: SelectorOptions,
    top_theta: f64,
    counter: DistanceCounter,
    instr: Instrumentation,
}

impl<S: FeatureSpace> Refiner<'_, S> {
    fn sub_theta(&self) -> ThetaRule {
        match (self.opts.theta_override, self.opts.freeze_theta) {
            (Some(t), _) => ThetaRule::Fixed(t),
            (None, true) => ThetaRule::Fixed(self.top_theta),
            (None, false) => ThetaRule::SubModel,
        }
    }

    fn refine(
        &mut self,
        clusters: &[FeatureCluster],
        alpha: &[f64],
        level: usize,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        self.instr.levels_used = self.instr.levels_used.max(level);
        let p = self.params;
        for (c, &a) in clusters.iter().zip(alpha) {
            let relevant = a > p.zero_tol;
            if p.aggressive && !relevant {
                self.instr.discarded_cluster_count += 1;
                self.instr.discard_levels.push(level);
                self.instr.representatives.push(c.representative);
                continue;
            }
            // At the last level the radius cannot change the outcome.
            let settled = level >= p.levels || {
                let before = self.counter.get();
                let r = cluster_radius(self.space, c, &self.counter);
                self.instr.radius_distance_count += self.counter.get() - before;
                r < p.tau
            };
            if settled {
                self.instr.representatives.push(c.representative);
                if relevant {
                    out.push(c.representative);
                }
                continue;
            }
            let k = p.k.min(c.len());
            let sub = variant_macqueen(self.space, &c.members, k, &self.counter)?;
            self.instr.kmeans_distance_count += sub.distance_count;
            let reps = sub.representatives();
            let theta = self.sub_theta();
            let mut instr = core::mem::take(&mut self.instr);
            let solved = rank_subset(self.sim, Some(&reps), theta, &self.opts, &mut instr);
            self.instr = instr;
            let (_, _, sub_alpha) = solved?;
            self.refine(&sub.clusters, &sub_alpha, level + 1, out)?;
        }
        Ok(())
    }
}

/// Identify-relevant-and-refine over `clusters` with QP weights `alpha`
/// (aligned with `clusters`), starting at `level`.
///
/// Per cluster: in aggressive mode a zero-weight cluster is dropped outright.
/// Otherwise a cluster whose radius is below `tau`, or that sits at the last
/// level, contributes its representative iff its weight is positive; any
/// other cluster is split into `min(k, |c|)` sub-clusters, QPFS ranks the
/// sub-representatives, and refinement recurses one level deeper.
pub fn irr<S: FeatureSpace>(
    space: &S,
    sim: &SimilarityModel,
    clusters: &[FeatureCluster],
    alpha: &[f64],
    params: &IrrParams,
    level: usize,
    opts: &SelectorOptions,
) -> Result<IrrOutcome> {
    params.validate()?;
    check_aligned(space, sim)?;
    if clusters.len() != alpha.len() {
        return Err(Error::Shape(format!(
            "{} clusters but {} weights",
            clusters.len(),
            alpha.len()
        )));
    }
    if level == 0 || level > params.levels {
        return Err(Error::param(
            "level",
            format!("{level} is outside 1..={}", params.levels),
        ));
    }
    let mut refiner = Refiner {
        space,
        sim,
        params: *params,
        opts: *opts,
        top_theta: top_theta(sim, opts)?,
        counter: DistanceCounter::new(),
        instr: Instrumentation::default(),
    };
    let mut survivors = Vec::new();
    refiner.refine(clusters, alpha, level, &mut survivors)?;
    let mut instrumentation = refiner.instr;
    instrumentation.distance_count = refiner.counter.get();
    Ok(IrrOutcome {
        survivors,
        instrumentation,
    })
}

fn interleaved<S: FeatureSpace>(
    space: &S,
    sim: &SimilarityModel,
    params: &IrrParams,
    opts: &SelectorOptions,
    method: Method,
) -> Result<SelectionResult> {
    params.validate()?;
    check_aligned(space, sim)?;
    let theta = top_theta(sim, opts)?;
    let m = space.n_features();
    let features: Vec<usize> = (0..m).collect();
    let k0 = params.initial_clusters.unwrap_or(params.k).min(m);

    let counter = DistanceCounter::new();
    let init = variant_macqueen(space, &features, k0, &counter)?;
    let mut instr = Instrumentation {
        kmeans_distance_count: init.distance_count,
        ..Instrumentation::default()
    };
    let reps = init.representatives();
    let (_, _, alpha) = rank_subset(sim, Some(&reps), ThetaRule::Fixed(theta), opts, &mut instr)?;

    let outcome = irr(space, sim, &init.clusters, &alpha, params, 1, opts)?;
    let survivors = outcome.survivors;
    let sub = outcome.instrumentation;
    instr.kmeans_distance_count += sub.kmeans_distance_count;
    instr.radius_distance_count += sub.radius_distance_count;
    instr.distance_count = init.distance_count + sub.distance_count;
    instr.qp_calls += sub.qp_calls;
    instr.qp_sizes.extend(sub.qp_sizes);
    instr.levels_used = sub.levels_used;
    instr.discarded_cluster_count = sub.discarded_cluster_count;
    instr.discard_levels = sub.discard_levels;
    instr.representatives = sub.representatives;

    if survivors.len() > opts.survivor_cap {
        return Err(Error::SurvivorCap {
            size: survivors.len(),
            cap: opts.survivor_cap,
        });
    }
    let (ranked, scores) = if survivors.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let (r, s, _) = rank_subset(
            sim,
            Some(&survivors),
            ThetaRule::Fixed(theta),
            opts,
            &mut instr,
        )?;
        (r, s)
    };
    let mut p = base_params(theta, opts);
    p.k = Some(params.k);
    p.k_init = Some(k0);
    p.tau = Some(params.tau);
    p.levels = Some(params.levels);
    p.zero_tol = params.zero_tol;
    Ok(SelectionResult {
        method,
        ranked,
        scores,
        params: p,
        instrumentation: instr,
    })
}

/// Interleaved k-means QPFS: initial k-means, QPFS on the representatives,
/// refinement, then a final QPFS over the survivors.
pub fn ikm_qpfs<S: FeatureSpace>(
    space: &S,
    sim: &SimilarityModel,
    params: &IrrParams,
    opts: &SelectorOptions,
) -> Result<SelectionResult> {
    let p = IrrParams {
        aggressive: false,
        ..*params
    };
    interleaved(space, sim, &p, opts, Method::IkmQpfs)
}

/// Aggressive interleaved k-means QPFS: as [`ikm_qpfs`], but any cluster whose
/// representative gets zero weight is discarded regardless of its radius.
pub fn ikma_qpfs<S: FeatureSpace>(
    space: &S,
    sim: &SimilarityModel,
    params: &IrrParams,
    opts: &SelectorOptions,
) -> Result<SelectionResult> {
    let p = IrrParams {
        aggressive: true,
        ..*params
    };
    interleaved(space, sim, &p, opts, Method::IkmaQpfs)
}
