//! Command-line front end. Every subcommand is a thin wrapper over
//! [`crate::eval`]; [`run`] returns the text the binary prints.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use redcut_core::dataset::{Dataset, SplitKind};
use redcut_core::infotheory::Redundancy;
use redcut_core::selectors::Method;
use redcut_core::svm::SvmOptions;

use crate::cache::SimilarityCache;
use crate::error::{Error, Result};
use crate::eval::{self, EvalConfig, SelectorSpec, DEFAULT_SEED};
use crate::io::{self, Format, LabelColumn};

#[derive(Debug, Parser)]
#[command(
    name = "redcut",
    version,
    about = "Feature selection by QP over mutual information"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank features and print the selection as JSON.
    Select {
        #[arg(long, default_value = "qpfs", value_parser = parse_method)]
        method: Method,
        #[command(flatten)]
        common: Common,
    },
    /// Error-rate curve over top-k features.
    Eval {
        #[arg(long, default_value = "qpfs", value_parser = parse_method)]
        method: Method,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        protocol: Protocol,
    },
    /// Compare methods under identical splits.
    Bench {
        /// Repeat the flag or give a comma-separated list.
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_method)]
        method: Vec<Method>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        protocol: Protocol,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Data file.
    pub data: PathBuf,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Sub-clusters per split.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Initial cluster count.
    #[arg(long = "k-init")]
    pub k_init: Option<usize>,
    #[arg(long, default_value_t = 0.9)]
    pub tau: f64,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value = "csv")]
    pub format: Format,
    /// Label column for CSV input: `last`, a zero-based index or a header name.
    #[arg(long, default_value = "last")]
    pub label: LabelColumn,
    /// Similarity cache directory; `REDCUT_CACHE` takes precedence.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// QP stopping tolerance on the KKT residual.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Keep the top-level θ inside refinement instead of recomputing it.
    #[arg(long)]
    pub freeze_theta: bool,
    /// Redundancy matrix: `mi` (bits) or `normalized` (`1 − d`).
    #[arg(long, default_value = "mi", value_parser = parse_redundancy)]
    pub redundancy: Redundancy,
}

#[derive(Debug, Args)]
pub struct Protocol {
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// `holdout:FRAC:REPS` or `loocv`.
    #[arg(long, default_value = "holdout:0.6:100", value_parser = parse_splits)]
    pub splits: SplitKind,
    /// `A:B[:STEP]`, inclusive; defaults to `1:min(M,100)`.
    #[arg(long = "k-grid", value_parser = parse_k_grid)]
    pub k_grid: Option<KGrid>,
    /// Select once on all instances instead of per training fold.
    #[arg(long)]
    pub select_once: bool,
    /// Fit discretization bins on each training fold only.
    #[arg(long)]
    pub fit_on_train: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KGrid(pub Vec<usize>);

pub fn parse_method(s: &str) -> std::result::Result<Method, String> {
    match s {
        "qpfs" => Ok(Method::Qpfs),
        "tlkm" => Ok(Method::TlkmQpfs),
        "ikm" => Ok(Method::IkmQpfs),
        "ikma" => Ok(Method::IkmaQpfs),
        _ => Err(format!(
            "unknown method `{s}` (expected qpfs, tlkm, ikm or ikma)"
        )),
    }
}

pub fn parse_redundancy(s: &str) -> std::result::Result<Redundancy, String> {
    match s {
        "mi" => Ok(Redundancy::MutualInformation),
        "normalized" => Ok(Redundancy::NormalizedSimilarity),
        _ => Err(format!(
            "unknown redundancy `{s}` (expected mi or normalized)"
        )),
    }
}

pub fn parse_splits(s: &str) -> std::result::Result<SplitKind, String> {
    if s == "loocv" {
        return Ok(SplitKind::LeaveOneOut);
    }
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["holdout", frac, reps] => {
            let train_fraction: f64 = frac.parse().map_err(|_| format!("bad fraction `{frac}`"))?;
            let n_repeats: usize = reps
                .parse()
                .map_err(|_| format!("bad repeat count `{reps}`"))?;
            if !(train_fraction > 0.0 && train_fraction < 1.0) {
                return Err(format!("fraction {train_fraction} is outside (0, 1)"));
            }
            if n_repeats == 0 {
                return Err("repeat count must be at least 1".into());
            }
            Ok(SplitKind::RandomHoldout {
                train_fraction,
                n_repeats,
            })
        }
        _ => Err(format!(
            "expected `holdout:FRAC:REPS` or `loocv`, got `{s}`"
        )),
    }
}

pub fn parse_k_grid(s: &str) -> std::result::Result<KGrid, String> {
    let nums: Vec<usize> = s
        .split(':')
        .map(|p| p.parse().map_err(|_| format!("bad number `{p}` in k grid")))
        .collect::<std::result::Result<_, _>>()?;
    let (a, b, step) = match nums.as_slice() {
        [a, b] => (*a, *b, 1),
        [a, b, step] => (*a, *b, *step),
        _ => return Err(format!("expected `A:B[:STEP]`, got `{s}`")),
    };
    if a == 0 || step == 0 || a > b {
        return Err(format!("k grid `{s}` needs 1 ≤ A ≤ B and STEP ≥ 1"));
    }
    Ok(KGrid((a..=b).step_by(step).collect()))
}

impl Common {
    fn spec(&self, method: Method) -> Result<SelectorSpec> {
        let mut spec = SelectorSpec::new(method);
        spec.theta = self.theta;
        spec.k = self.k;
        spec.k_init = self.k_init;
        spec.tau = self.tau;
        spec.levels = self.levels;
        spec.freeze_theta = self.freeze_theta;
        spec.qp.tol = self.tol;
        spec.redundancy = self.redundancy;
        spec.validate()?;
        Ok(spec)
    }

    fn cache(&self) -> SimilarityCache {
        SimilarityCache::from_env_or(self.cache.clone())
    }

    fn load(&self) -> Result<Dataset> {
        io::load(&self.data, self.format, &self.label)
    }
}

impl Protocol {
    fn config(&self, m: usize, seed: u64) -> Result<EvalConfig> {
        let mut cfg = EvalConfig::new(m);
        cfg.splits = self.splits;
        cfg.seed = seed;
        if let Some(KGrid(g)) = &self.k_grid {
            cfg.k_grid = g.clone();
        }
        if !(self.c > 0.0) {
            return Err(Error::Config(format!(
                "--c must be positive, got {}",
                self.c
            )));
        }
        cfg.svm = SvmOptions {
            c: self.c,
            ..SvmOptions::default()
        };
        cfg.select_once = self.select_once;
        cfg.fit_bins_on_train = self.fit_on_train;
        Ok(cfg)
    }
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    // A second initialization in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

/// What a successful run produced: text for stdout and stderr.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
}

/// Executes a parsed command. Files named by `--out` are written here.
pub fn run(cli: &Cli) -> Result<Output> {
    let mut out = Output::default();
    match &cli.command {
        Command::Select { method, common } => {
            let spec = common.spec(*method)?;
            init_threads(common.threads)?;
            let data = common.load()?;
            let r = eval::select(&data, &spec, common.seed, &common.cache())?;
            out.stderr = format!(
                "seed: {}\nselection wall time: {:.6}s\n",
                common.seed,
                r.instrumentation.wall_time_secs.unwrap_or(0.0)
            );
            // Wall time goes to stderr so the JSON is reproducible.
            let mut stable = r;
            stable.instrumentation.wall_time_secs = None;
            match &common.out {
                Some(p) => write(p, &to_json(&stable))?,
                None => out.stdout = to_json(&stable),
            }
        }
        Command::Eval {
            method,
            common,
            protocol,
        } => {
            let spec = common.spec(*method)?;
            protocol.config(1, common.seed)?;
            init_threads(common.threads)?;
            let data = common.load()?;
            let cfg = protocol.config(data.n_features(), common.seed)?;
            let report = eval::topk_curve(&data, &spec, &cfg, &common.cache())?;
            let timings = report.timings.unwrap_or_default();
            let stable = report.without_timings();
            out.stderr = format!(
                "seed: {}\ntimings: {}\n",
                cfg.seed,
                to_json(&timings).trim_end()
            );
            match &common.out {
                Some(p) => {
                    write(p, &to_json(&stable))?;
                    write(&p.with_extension("csv"), &stable.to_csv())?;
                    write(&p.with_extension("timings.json"), &to_json(&timings))?;
                }
                None => out.stdout = to_json(&stable),
            }
        }
        Command::Bench {
            method,
            common,
            protocol,
        } => {
            if method.len() < 2 {
                return Err(Error::Config("need ≥2 methods".into()));
            }
            let specs: Vec<SelectorSpec> = method
                .iter()
                .map(|&m| common.spec(m))
                .collect::<Result<_>>()?;
            protocol.config(1, common.seed)?;
            init_threads(common.threads)?;
            let data = common.load()?;
            let cfg = protocol.config(data.n_features(), common.seed)?;
            let report = eval::bench(&data, &specs, &cfg, &common.cache())?;
            out.stdout = report.to_table();
            if let Some(p) = &common.out {
                write(p, &to_json(&report))?;
            }
        }
    }
    Ok(out)
}

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            eprint!("{}", out.stderr);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
