//! Error-rate curves over top-k features, parameter search and method
//! comparison.
//!
//! Every repeat of a split plan selects features on its training fold only
//! (unless `select_once` is set), trains a linear classifier on the top `k`
//! features for each `k` of the grid and scores the test fold. Results are
//! deterministic for a given seed; wall-clock measurements are kept apart in
//! [`Timings`] so reports can be compared byte for byte.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rayon::prelude::*;
use redcut_core::clustering::MiSpace;
use redcut_core::dataset::{
    discretize, discretize_fitted, make_splits, normalize, Dataset, DiscretizedDataset, Split,
    SplitKind,
};
use redcut_core::infotheory::{Redundancy, SimilarityModel};
use redcut_core::qp::QpOptions;
use redcut_core::selectors::{
    ikm_qpfs, ikma_qpfs, qpfs, tlkm_qpfs, Instrumentation, IrrParams, Method, SelectionResult,
    SelectorOptions,
};
use redcut_core::svm::{error_rate, train_linear, SvmOptions};
use serde::{Deserialize, Serialize};

use crate::cache::SimilarityCache;
use crate::error::{Error, Result};

/// Version of the JSON and CSV report layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 13;

/// Everything needed to run one selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorSpec {
    pub method: Method,
    /// Fixed `θ`; derived from the data when `None`.
    pub theta: Option<f64>,
    /// Sub-clusters per split in the interleaved methods.
    pub k: usize,
    /// Initial cluster count `k′`. TLKM defaults to `min(M, 50)`, the
    /// interleaved methods to `k`.
    pub k_init: Option<usize>,
    pub tau: f64,
    pub levels: usize,
    pub freeze_theta: bool,
    pub redundancy: Redundancy,
    pub qp: QpOptions,
    pub survivor_cap: usize,
}

impl Default for SelectorSpec {
    fn default() -> Self {
        Self {
            method: Method::Qpfs,
            theta: None,
            k: 5,
            k_init: None,
            tau: 0.9,
            levels: 3,
            freeze_theta: false,
            redundancy: Redundancy::MutualInformation,
            qp: QpOptions::default(),
            survivor_cap: SelectorOptions::default().survivor_cap,
        }
    }
}

impl SelectorSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    /// Range checks that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| {
            Err(Error::Core(redcut_core::Error::InvalidParameter {
                name,
                reason,
            }))
        };
        if let Some(t) = self.theta {
            if !(0.0..=1.0).contains(&t) {
                return bad("theta", format!("{t} is outside [0, 1]"));
            }
        }
        if self.k_init == Some(0) {
            return bad("k-init", "must be at least 1".into());
        }
        if !(self.qp.tol > 0.0) {
            return bad("tol", "must be positive".into());
        }
        match self.method {
            Method::Qpfs => Ok(()),
            Method::TlkmQpfs => {
                if !(self.tau > 0.0 && self.tau <= 1.0) {
                    return bad("tau", format!("{} is outside (0, 1]", self.tau));
                }
                Ok(())
            }
            Method::IkmQpfs | Method::IkmaQpfs => Ok(self.irr_params(usize::MAX).validate()?),
        }
    }

    fn irr_params(&self, m: usize) -> IrrParams {
        let mut p = IrrParams::new(self.k, self.tau, self.levels);
        p.zero_tol = self.qp.zero_tol;
        p.initial_clusters = self.k_init.map(|k| k.min(m));
        p
    }

    fn options(&self) -> SelectorOptions {
        SelectorOptions {
            theta_override: self.theta,
            freeze_theta: self.freeze_theta,
            qp: self.qp,
            survivor_cap: self.survivor_cap,
        }
    }

    /// `k′` actually used on `m` features.
    pub fn resolved_k_init(&self, m: usize) -> usize {
        match self.method {
            Method::TlkmQpfs => self.k_init.unwrap_or(50).min(m),
            _ => self.k_init.unwrap_or(self.k).min(m),
        }
    }
}

/// Runs the selector on discretized features and their similarity model,
/// recording the selector's own wall time and the seed.
pub fn run_selector(
    spec: &SelectorSpec,
    dd: &DiscretizedDataset,
    sim: &SimilarityModel,
    seed: u64,
) -> Result<SelectionResult> {
    spec.validate()?;
    let opts = spec.options();
    let m = dd.n_features();
    let start = Instant::now();
    let space = MiSpace::new(dd);
    let mut r = match spec.method {
        Method::Qpfs => qpfs(sim, &opts)?,
        Method::TlkmQpfs => tlkm_qpfs(&space, sim, spec.resolved_k_init(m), spec.tau, &opts)?,
        Method::IkmQpfs => ikm_qpfs(&space, sim, &spec.irr_params(m), &opts)?,
        Method::IkmaQpfs => ikma_qpfs(&space, sim, &spec.irr_params(m), &opts)?,
    };
    r.instrumentation.wall_time_secs = Some(start.elapsed().as_secs_f64());
    r.params.seed = Some(seed);
    Ok(r)
}

/// Loads or builds the similarity model, then runs the selector.
pub fn select(
    dataset: &Dataset,
    spec: &SelectorSpec,
    seed: u64,
    cache: &SimilarityCache,
) -> Result<SelectionResult> {
    spec.validate()?;
    let d = normalize(dataset);
    let dd = discretize(&d);
    let (sim, _) = cache.get_or_build(&dd, d.labels(), spec.redundancy)?;
    run_selector(spec, &dd, &sim, seed)
}

/// Protocol for [`topk_curve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub splits: SplitKind,
    pub seed: u64,
    pub k_grid: Vec<usize>,
    pub svm: SvmOptions,
    /// Select once on all instances instead of per training fold.
    pub select_once: bool,
    /// Fit discretization statistics on the training fold only.
    pub fit_bins_on_train: bool,
}

impl EvalConfig {
    /// 60/40 holdout with 100 repeats, `k = 1..=min(M, 100)`, `C = 1`.
    pub fn new(m: usize) -> Self {
        Self {
            splits: SplitKind::RandomHoldout {
                train_fraction: 0.6,
                n_repeats: 100,
            },
            seed: DEFAULT_SEED,
            k_grid: default_k_grid(m),
            svm: SvmOptions::default(),
            select_once: false,
            fit_bins_on_train: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k_grid.is_empty() {
            return Err(Error::Config("k grid is empty".into()));
        }
        if self.k_grid.contains(&0) {
            return Err(Error::Config("k grid values must be at least 1".into()));
        }
        if !(self.svm.c > 0.0) {
            return Err(Error::Config(format!(
                "C must be positive, got {}",
                self.svm.c
            )));
        }
        Ok(())
    }
}

pub fn default_k_grid(m: usize) -> Vec<usize> {
    (1..=m.clamp(1, 100)).collect()
}

/// Mean and population standard deviation of test error (%) over repeats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStat {
    pub mean_error: f64,
    pub std_error: f64,
    /// Mean number of features actually used; below `k` when the selector
    /// returned fewer features.
    pub mean_features: f64,
}

impl ErrorStat {
    fn from_samples(errors: &[f64], features: &[usize]) -> Self {
        let n = errors.len().max(1) as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
        Self {
            mean_error: mean,
            std_error: var.sqrt(),
            mean_features: features.iter().sum::<usize>() as f64 / n,
        }
    }
}

/// Wall-clock seconds per phase, summed over repeats.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub similarity_secs: f64,
    pub selection_secs: f64,
    pub classifier_secs: f64,
    pub total_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub dataset: String,
    /// `None` for a fixed ranking.
    pub method: Option<Method>,
    pub selector: Option<SelectorSpec>,
    pub seed: u64,
    pub splits: SplitKind,
    pub n_repeats: usize,
    pub c: f64,
    pub select_once: bool,
    #[serde(default)]
    pub fit_bins_on_train: bool,
    pub per_k_error: BTreeMap<usize, ErrorStat>,
    pub baseline_error: ErrorStat,
    /// Error using every representative of the clustering stage.
    pub kmeans_baseline_error: Option<ErrorStat>,
    /// Selector instrumentation per repeat (one entry when selecting once).
    pub counters: Vec<Instrumentation>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings: Option<Timings>,
}

impl EvalReport {
    /// Lowest mean error over the grid and the smallest `k` attaining it.
    pub fn lowest_error(&self) -> Option<(usize, ErrorStat)> {
        self.per_k_error.iter().fold(
            None,
            |best: Option<(usize, ErrorStat)>, (&k, &st)| match best {
                Some((_, b)) if b.mean_error <= st.mean_error => best,
                _ => Some((k, st)),
            },
        )
    }

    /// Copy with every wall-clock field cleared; equal inputs and seed give
    /// equal results.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.timings = None;
        for c in &mut r.counters {
            c.wall_time_secs = None;
        }
        r
    }

    /// Plot-ready rows: `method,k,mean_error,std_error`.
    pub fn to_csv(&self) -> String {
        let method = self.method.map_or("ranking", Method::short_name);
        let mut out = String::from("method,k,mean_error,std_error\n");
        for (k, st) in &self.per_k_error {
            out.push_str(&format!(
                "{method},{k},{},{}\n",
                st.mean_error, st.std_error
            ));
        }
        out
    }
}

/// Per-repeat inputs shared by every selector evaluated on that repeat.
struct Fold {
    dd: DiscretizedDataset,
    labels: Vec<usize>,
}

struct Prepared {
    data: Dataset,
    dd: DiscretizedDataset,
}

fn prepare(dataset: &Dataset) -> Prepared {
    let data = normalize(dataset);
    let dd = discretize(&data);
    Prepared { data, dd }
}

fn make_fold(p: &Prepared, split: &Split, cfg: &EvalConfig) -> Result<Fold> {
    let dd = if cfg.fit_bins_on_train {
        discretize_fitted(&p.data, &split.train)?.select_instances(&split.train)
    } else {
        p.dd.select_instances(&split.train)
    };
    let labels = split.train.iter().map(|&j| p.data.labels()[j]).collect();
    Ok(Fold { dd, labels })
}

/// Test error (%) of a classifier trained on `features` over the split.
fn score(p: &Prepared, split: &Split, features: &[usize], svm: &SvmOptions) -> Result<f64> {
    let y = p.data.labels();
    let xtr = p.data.instance_rows(features, &split.train);
    let ytr: Vec<usize> = split.train.iter().map(|&j| y[j]).collect();
    let model = train_linear(&xtr, &ytr, svm)?;
    let xte = p.data.instance_rows(features, &split.test);
    let yte: Vec<usize> = split.test.iter().map(|&j| y[j]).collect();
    Ok(error_rate(&model, &xte, &yte))
}

struct CurveSample {
    per_k: Vec<(f64, usize)>,
    kmeans: Option<f64>,
    clf_secs: f64,
}

fn curve_for(
    p: &Prepared,
    split: &Split,
    ranked: &[usize],
    representatives: Option<&[usize]>,
    cfg: &EvalConfig,
) -> Result<CurveSample> {
    let start = Instant::now();
    let mut per_k = Vec::with_capacity(cfg.k_grid.len());
    for &k in &cfg.k_grid {
        let feats = &ranked[..k.min(ranked.len())];
        per_k.push((score(p, split, feats, &cfg.svm)?, feats.len()));
    }
    let kmeans = match representatives {
        Some(r) if !r.is_empty() => Some(score(p, split, r, &cfg.svm)?),
        _ => None,
    };
    Ok(CurveSample {
        per_k,
        kmeans,
        clf_secs: start.elapsed().as_secs_f64(),
    })
}

fn representatives(r: &SelectionResult) -> Option<&[usize]> {
    r.method
        .is_clustered()
        .then_some(r.instrumentation.representatives.as_slice())
}

struct RepeatOutcome {
    curve: CurveSample,
    baseline: f64,
    counters: Option<Instrumentation>,
    sim_secs: f64,
    sel_secs: f64,
}

/// Builds the report for a selector, or for a fixed ranking when `spec` is
/// `None`.
fn curve_report(
    dataset: &Dataset,
    spec: Option<&SelectorSpec>,
    fixed: Option<&[usize]>,
    cfg: &EvalConfig,
    cache: &SimilarityCache,
) -> Result<EvalReport> {
    cfg.validate()?;
    if let Some(s) = spec {
        s.validate()?;
    }
    let total = Instant::now();
    let p = prepare(dataset);
    let m = p.data.n_features();
    let plan = make_splits(p.data.labels(), cfg.splits, cfg.seed)?;

    let mut once_sim_secs = 0.0;
    let once: Option<SelectionResult> = match spec {
        Some(s) if cfg.select_once => {
            let t = Instant::now();
            let (sim, _) = cache.get_or_build(&p.dd, p.data.labels(), s.redundancy)?;
            once_sim_secs = t.elapsed().as_secs_f64();
            Some(run_selector(s, &p.dd, &sim, cfg.seed)?)
        }
        _ => None,
    };
    let all: Vec<usize> = (0..m).collect();

    let outcomes: Vec<RepeatOutcome> = plan
        .assignments
        .par_iter()
        .map(|split| -> Result<RepeatOutcome> {
            let mut sim_secs = 0.0;
            let mut sel_secs = 0.0;
            let per_fold;
            let (ranked, reps, counters): (&[usize], Option<&[usize]>, _) =
                match (spec, &once, fixed) {
                    (_, Some(r), _) => (&r.ranked, representatives(r), None),
                    (Some(s), None, _) => {
                        let fold = make_fold(&p, split, cfg)?;
                        let t = Instant::now();
                        let (sim, _) = cache.get_or_build(&fold.dd, &fold.labels, s.redundancy)?;
                        sim_secs = t.elapsed().as_secs_f64();
                        per_fold = run_selector(s, &fold.dd, &sim, cfg.seed)?;
                        sel_secs = per_fold.instrumentation.wall_time_secs.unwrap_or(0.0);
                        (
                            &per_fold.ranked,
                            representatives(&per_fold),
                            Some(per_fold.instrumentation.clone()),
                        )
                    }
                    (None, None, Some(r)) => (r, None, None),
                    (None, None, None) => unreachable!("either a selector or a ranking"),
                };
            let curve = curve_for(&p, split, ranked, reps, cfg)?;
            let baseline = score(&p, split, &all, &cfg.svm)?;
            Ok(RepeatOutcome {
                curve,
                baseline,
                counters,
                sim_secs,
                sel_secs,
            })
        })
        .collect::<Result<_>>()?;

    let mut per_k_error = BTreeMap::new();
    for (g, &k) in cfg.k_grid.iter().enumerate() {
        let errs: Vec<f64> = outcomes.iter().map(|o| o.curve.per_k[g].0).collect();
        let feats: Vec<usize> = outcomes.iter().map(|o| o.curve.per_k[g].1).collect();
        per_k_error.insert(k, ErrorStat::from_samples(&errs, &feats));
    }
    let baselines: Vec<f64> = outcomes.iter().map(|o| o.baseline).collect();
    let kmeans: Vec<f64> = outcomes.iter().filter_map(|o| o.curve.kmeans).collect();
    let kmeans_baseline_error = (kmeans.len() == outcomes.len() && !kmeans.is_empty()).then(|| {
        let reps_len = |o: &RepeatOutcome| {
            o.counters
                .as_ref()
                .or(once.as_ref().map(|r| &r.instrumentation))
                .map_or(0, |c| c.representatives.len())
        };
        let feats: Vec<usize> = outcomes.iter().map(reps_len).collect();
        ErrorStat::from_samples(&kmeans, &feats)
    });
    let counters = match &once {
        Some(r) => vec![r.instrumentation.clone()],
        None => outcomes.iter().filter_map(|o| o.counters.clone()).collect(),
    };
    let timings = Timings {
        similarity_secs: once_sim_secs + outcomes.iter().map(|o| o.sim_secs).sum::<f64>(),
        selection_secs: once
            .as_ref()
            .map_or(0.0, |r| r.instrumentation.wall_time_secs.unwrap_or(0.0))
            + outcomes.iter().map(|o| o.sel_secs).sum::<f64>(),
        classifier_secs: outcomes.iter().map(|o| o.curve.clf_secs).sum(),
        total_secs: total.elapsed().as_secs_f64(),
    };
    Ok(EvalReport {
        schema_version: SCHEMA_VERSION,
        dataset: dataset.name().to_string(),
        method: spec.map(|s| s.method),
        selector: spec.copied(),
        seed: cfg.seed,
        splits: cfg.splits,
        n_repeats: plan.assignments.len(),
        c: cfg.svm.c,
        select_once: cfg.select_once,
        fit_bins_on_train: cfg.fit_bins_on_train,
        per_k_error,
        baseline_error: ErrorStat::from_samples(&baselines, &vec![m; baselines.len()]),
        kmeans_baseline_error,
        counters,
        timings: Some(timings),
    })
}

/// Error-rate curve of a selector over the `k` grid.
pub fn topk_curve(
    dataset: &Dataset,
    spec: &SelectorSpec,
    cfg: &EvalConfig,
    cache: &SimilarityCache,
) -> Result<EvalReport> {
    curve_report(dataset, Some(spec), None, cfg, cache)
}

/// Error-rate curve of a fixed feature ranking.
pub fn topk_curve_ranked(
    dataset: &Dataset,
    ranking: &[usize],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if let Some(&bad) = ranking.iter().find(|&&i| i >= dataset.n_features()) {
        return Err(Error::Config(format!(
            "ranking refers to feature {bad}, which does not exist"
        )));
    }
    curve_report(
        dataset,
        None,
        Some(ranking),
        cfg,
        &SimilarityCache::default(),
    )
}

/// Candidate values for [`cross_validate_params`]. Only the grids relevant
/// to the method are searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrids {
    pub theta: Vec<f64>,
    pub tau: Vec<f64>,
    /// Sub-clusters per split (interleaved methods).
    pub k: Vec<usize>,
    /// Initial clusters (TLKM).
    pub k_init: Vec<usize>,
}

impl Default for ParamGrids {
    fn default() -> Self {
        Self {
            theta: vec![0.0, 0.1, 0.3, 0.5, 0.7, 0.9],
            tau: (70..=99).map(|t| t as f64 / 100.0).collect(),
            k: (5..=1000).step_by(5).collect(),
            k_init: (3..=150).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCandidate {
    pub spec: SelectorSpec,
    /// Mean error at the reference `k`, or the minimum over the grid.
    pub error: f64,
    pub best_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub best: CvCandidate,
    pub candidates: Vec<CvCandidate>,
}

fn candidates(base: &SelectorSpec, grids: &ParamGrids, m: usize) -> Result<Vec<SelectorSpec>> {
    let mut thetas: Vec<Option<f64>> = grids.theta.iter().map(|&t| Some(t)).collect();
    if thetas.is_empty() {
        thetas.push(base.theta);
    }
    let nonempty = |name: &str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{name} grid is empty")))
        }
    };
    let mut dims: Vec<(usize, f64)> = Vec::new();
    match base.method {
        Method::Qpfs => dims.push((0, base.tau)),
        Method::TlkmQpfs => {
            nonempty("tau", !grids.tau.is_empty())?;
            let mut ks: Vec<usize> = grids.k_init.iter().map(|&k| k.min(m)).collect();
            ks.sort_unstable();
            ks.dedup();
            nonempty("k-init", !ks.is_empty())?;
            for &k in &ks {
                for &t in &grids.tau {
                    dims.push((k, t));
                }
            }
        }
        Method::IkmQpfs | Method::IkmaQpfs => {
            nonempty("tau", !grids.tau.is_empty())?;
            let mut ks: Vec<usize> = grids.k.iter().map(|&k| k.min(m).max(2)).collect();
            ks.sort_unstable();
            ks.dedup();
            nonempty("k", !ks.is_empty())?;
            for &k in &ks {
                for &t in &grids.tau {
                    dims.push((k, t));
                }
            }
        }
    }
    let mut out = Vec::new();
    for &theta in &thetas {
        for &(k, tau) in &dims {
            let mut s = SelectorSpec { theta, ..*base };
            match base.method {
                Method::Qpfs => {}
                Method::TlkmQpfs => {
                    s.k_init = Some(k);
                    s.tau = tau;
                }
                _ => {
                    s.k = k;
                    s.k_init = None;
                    s.tau = tau;
                }
            }
            s.validate()?;
            out.push(s);
        }
    }
    Ok(out)
}

/// Size of the model a candidate produces; smaller wins ties.
fn model_size(s: &SelectorSpec) -> usize {
    match s.method {
        Method::Qpfs => 0,
        Method::TlkmQpfs => s.k_init.unwrap_or(0),
        _ => s.k,
    }
}

/// Grid search minimizing mean error at `reference_k` (or the minimum over
/// the `k` grid when `None`). Ties go to the smaller `k′`/`k`, then the
/// larger `τ`, then grid order. Similarity models are computed once per
/// repeat and shared across candidates.
pub fn cross_validate_params(
    dataset: &Dataset,
    base: &SelectorSpec,
    grids: &ParamGrids,
    cfg: &EvalConfig,
    reference_k: Option<usize>,
    cache: &SimilarityCache,
) -> Result<CvOutcome> {
    cfg.validate()?;
    base.validate()?;
    if let Some(k) = reference_k {
        if !cfg.k_grid.contains(&k) {
            return Err(Error::Config(format!(
                "reference k {k} is not in the k grid"
            )));
        }
    }
    let p = prepare(dataset);
    let specs = candidates(base, grids, p.data.n_features())?;
    let plan = make_splits(p.data.labels(), cfg.splits, cfg.seed)?;

    // errors[repeat][candidate][grid index]
    let errors: Vec<Vec<Vec<f64>>> = plan
        .assignments
        .par_iter()
        .map(|split| -> Result<Vec<Vec<f64>>> {
            let fold = make_fold(&p, split, cfg)?;
            let (sim, _) = cache.get_or_build(&fold.dd, &fold.labels, base.redundancy)?;
            // Candidates often agree on a prefix; scoring is deterministic,
            // so each distinct prefix is trained once per repeat.
            let mut seen: HashMap<Vec<usize>, f64> = HashMap::new();
            specs
                .iter()
                .map(|s| {
                    let r = run_selector(s, &fold.dd, &sim, cfg.seed)?;
                    cfg.k_grid
                        .iter()
                        .map(|&k| {
                            let feats = &r.ranked[..k.min(r.ranked.len())];
                            if let Some(&e) = seen.get(feats) {
                                return Ok(e);
                            }
                            let e = score(&p, split, feats, &cfg.svm)?;
                            seen.insert(feats.to_vec(), e);
                            Ok(e)
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let n_rep = errors.len() as f64;
    let scored: Vec<CvCandidate> = specs
        .iter()
        .enumerate()
        .map(|(c, s)| {
            let means: Vec<f64> = (0..cfg.k_grid.len())
                .map(|g| errors.iter().map(|r| r[c][g]).sum::<f64>() / n_rep)
                .collect();
            let g = match reference_k {
                Some(k) => cfg.k_grid.iter().position(|&x| x == k).unwrap_or(0),
                None => (0..means.len()).fold(0, |b, g| if means[g] < means[b] { g } else { b }),
            };
            CvCandidate {
                spec: *s,
                error: means[g],
                best_k: cfg.k_grid[g],
            }
        })
        .collect();
    let best = scored
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.error
                .total_cmp(&b.error)
                .then(model_size(&a.spec).cmp(&model_size(&b.spec)))
                .then(b.spec.tau.total_cmp(&a.spec.tau))
                .then(ia.cmp(ib))
        })
        .map(|(_, c)| c.clone())
        .expect("at least one candidate");
    Ok(CvOutcome {
        best,
        candidates: scored,
    })
}

/// One method's line in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    /// Selector wall time on all instances, similarity excluded.
    pub wall_time_secs: f64,
    pub distance_count: u64,
    pub qp_calls: usize,
    pub max_qp_size: usize,
    pub n_ranked: usize,
    pub lowest_error: f64,
    pub k_at_lowest: usize,
    pub features_at_lowest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub dataset: String,
    pub seed: u64,
    pub splits: SplitKind,
    pub rows: Vec<BenchRow>,
    pub reports: Vec<EvalReport>,
}

impl BenchReport {
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "dataset: {}\nseed: {}\n{:<10} {:>12} {:>14} {:>9} {:>11} {:>12} {:>8} {:>22}\n",
            self.dataset,
            self.seed,
            "method",
            "wall_time_s",
            "distance_count",
            "qp_calls",
            "max_qp_size",
            "lowest_error",
            "k",
            "features_at_lowest"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<10} {:>12.6} {:>14} {:>9} {:>11} {:>12.2} {:>8} {:>22.1}\n",
                r.method.short_name(),
                r.wall_time_secs,
                r.distance_count,
                r.qp_calls,
                r.max_qp_size,
                r.lowest_error,
                r.k_at_lowest,
                r.features_at_lowest
            ));
        }
        out
    }
}

/// Runs every selector under the same splits and seed.
pub fn bench(
    dataset: &Dataset,
    specs: &[SelectorSpec],
    cfg: &EvalConfig,
    cache: &SimilarityCache,
) -> Result<BenchReport> {
    if specs.len() < 2 {
        return Err(Error::Config("need ≥2 methods".into()));
    }
    for s in specs {
        s.validate()?;
    }
    cfg.validate()?;
    let p = prepare(dataset);
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for spec in specs {
        let (sim, _) = cache.get_or_build(&p.dd, p.data.labels(), spec.redundancy)?;
        let full = run_selector(spec, &p.dd, &sim, cfg.seed)?;
        drop(sim);
        let report = topk_curve(dataset, spec, cfg, cache)?;
        let (k, st) = report.lowest_error().expect("k grid is nonempty");
        let ins = &full.instrumentation;
        rows.push(BenchRow {
            method: spec.method,
            wall_time_secs: ins.wall_time_secs.unwrap_or(0.0),
            distance_count: ins.distance_count,
            qp_calls: ins.qp_calls,
            max_qp_size: ins.max_qp_size(),
            n_ranked: full.ranked.len(),
            lowest_error: st.mean_error,
            k_at_lowest: k,
            features_at_lowest: st.mean_features,
        });
        reports.push(report);
    }
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        dataset: dataset.name().to_string(),
        seed: cfg.seed,
        splits: cfg.splits,
        rows,
        reports,
    })
}
