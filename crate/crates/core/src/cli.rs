//! Command-line front end: `plan`, `sample`, `bound` and `verify`.
//!
//! Every command is a pure function from arguments to a [`CommandOutput`];
//! the binary only prints it and exits with its code. Exit codes are
//! 0 (success), 1 (a verification property failed), 2 (invalid input or no
//! feasible plan) and 3 (numeric failure; partial outputs are written).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::metrics::{w2_empirical_vs_gaussian, w2_gaussian, SampleSet, MAX_EMPIRICAL_POINTS};
use crate::oracles::{gaussian_chain_law, AffineChainSpec};
use crate::planner::{
    best_plan, candidate_plans, lmc_bound_first_order, lmc_bound_first_order_branch, lmc_bound_second_order,
    plan_lmc, plan_sgd_first_order, plan_sgd_second_order, potential_at, w0_upper_bound, Branch, Plan, Theorem,
};
use crate::potentials::{
    make_isotropic_gaussian_target, make_logistic_target, make_ridge_target, Constants, DecomposableTarget,
    Potential,
};
use crate::samplers::{run_chains, Recording, SamplerConfig, SamplerKind};
use crate::verify::run_suite;

/// Offset mixed into the master seed for the reference draws of π, so they
/// never share a stream with the chains.
const REFERENCE_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Parser)]
#[command(name = "langevin-sgd", version, about = "Langevin and SGD samplers with W2-accuracy schedules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a target accuracy into (h, b, K) schedules.
    Plan(RunArgs),
    /// Run chains and write samples.csv, trajectory.csv and summary.json.
    Sample(RunArgs),
    /// Evaluate a W2 bound term by term.
    Bound(BoundArgs),
    /// Run a self-check suite.
    Verify(VerifyArgs),
}

/// Flags shared by `plan` and `sample`; they override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `best`, `first-order`, `second-order`, `lmc_first_order`, ...
    #[arg(long)]
    pub theorem: Option<String>,
    /// Comma-separated step indices to record, e.g. `0,10,100`.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<u64>>,
    /// `lmc`, `sgd_idealized` or `sgd_minibatch`.
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long = "k", short = 'K')]
    pub k: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BoundArgs {
    /// `first-order` or `second-order`.
    #[arg(long, default_value = "first-order")]
    pub theorem: String,
    #[arg(long)]
    pub h: f64,
    #[arg(long = "k", short = 'K')]
    pub k: u64,
    /// Strong convexity of f.
    #[arg(long)]
    pub m: Option<f64>,
    /// Smoothness of f.
    #[arg(long = "smoothness", alias = "big-m")]
    pub smoothness: Option<f64>,
    /// Hessian-Lipschitz constant of f.
    #[arg(long = "hessian-lipschitz", alias = "lipschitz")]
    pub hessian_lipschitz: Option<f64>,
    #[arg(long = "dim", short = 'p')]
    pub dim: Option<usize>,
    /// Initial distance W2(ν₀, π).
    #[arg(long)]
    pub w0: Option<f64>,
    /// f(θ₀), used to bound W0 when `--w0` is absent.
    #[arg(long)]
    pub f0: Option<f64>,
    /// Take constants, dimension and f(θ₀) from a target config.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// `variance`, `minibatch`, `equivalence`, `chain-law`, `metric`,
    /// `bound-validity` or `all`.
    #[arg(default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// What a command prints and how it exits.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandOutput {
    fn json(code: i32, value: &Value) -> Self {
        Self {
            code,
            stdout: format!("{}\n", serde_json::to_string_pretty(value).expect("serializable")),
            stderr: String::new(),
        }
    }

    fn failure(err: &Error) -> Self {
        let mut report = json!({ "error": err.kind(), "message": err.to_string() });
        if let Error::Infeasible(conditions) = err {
            report["conditions"] = serde_json::to_value(conditions).expect("serializable");
        }
        let mut out = Self::json(exit_code(err), &report);
        out.stderr = format!("error: {err}\n");
        out
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NumericFailure { .. } => 3,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I) -> CommandOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                CommandOutput { code, stdout: text, stderr: String::new() }
            } else {
                CommandOutput { code, stdout: String::new(), stderr: text }
            }
        }
    }
}

pub fn run(cli: Cli) -> CommandOutput {
    let outcome = match cli.command {
        Command::Plan(args) => load_run_config(&args).and_then(|c| cmd_plan(&c)),
        Command::Sample(args) => load_run_config(&args).and_then(|c| cmd_sample(&c)),
        Command::Bound(args) => cmd_bound(&args),
        Command::Verify(args) => cmd_verify(&args.suite, args.seed),
    };
    outcome.unwrap_or_else(|e| CommandOutput::failure(&e))
}

// ---------------------------------------------------------------------------
// Configuration

/// A per-component Hessian-Lipschitz override: a number, or `"none"` to
/// declare the constant unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LipschitzSpec {
    Value(f64),
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CentersSpec {
    Explicit(Vec<Vec<f64>>),
    /// `z_i ~ N(0, scale² I)` drawn from `seed`.
    Random {
        seed: u64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// JSON target description, tagged by `kind`. Relative CSV paths are
/// resolved against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    IsotropicGaussian {
        p: usize,
        n: usize,
        m_g: f64,
        centers: CentersSpec,
        #[serde(default)]
        hessian_lipschitz: Option<LipschitzSpec>,
    },
    Ridge {
        #[serde(default)]
        design: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        design_csv: Option<PathBuf>,
        #[serde(default)]
        responses: Option<Vec<f64>>,
        #[serde(default)]
        responses_csv: Option<PathBuf>,
        lambda: f64,
        #[serde(default)]
        hessian_lipschitz: Option<LipschitzSpec>,
    },
    Logistic {
        #[serde(default)]
        design: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        design_csv: Option<PathBuf>,
        #[serde(default)]
        labels: Option<Vec<f64>>,
        #[serde(default)]
        labels_csv: Option<PathBuf>,
        lambda: f64,
        #[serde(default)]
        hessian_lipschitz: Option<LipschitzSpec>,
    },
}

impl TargetSpec {
    pub fn build(&self, base: &Path) -> Result<DecomposableTarget> {
        let (target, lipschitz) = match self {
            TargetSpec::IsotropicGaussian {
                p,
                n,
                m_g,
                centers,
                hessian_lipschitz,
            } => {
                let centers = match centers {
                    CentersSpec::Explicit(c) => c.clone(),
                    CentersSpec::Random { seed, scale } => random_centers(*n, *p, *seed, *scale),
                };
                (make_isotropic_gaussian_target(*p, *n, *m_g, &centers)?, hessian_lipschitz)
            }
            TargetSpec::Ridge {
                design,
                design_csv,
                responses,
                responses_csv,
                lambda,
                hessian_lipschitz,
            } => {
                let x = matrix_source(design, design_csv, base, "design")?;
                let y = vector_source(responses, responses_csv, base, "responses")?;
                (make_ridge_target(&x, &y, *lambda)?, hessian_lipschitz)
            }
            TargetSpec::Logistic {
                design,
                design_csv,
                labels,
                labels_csv,
                lambda,
                hessian_lipschitz,
            } => {
                let x = matrix_source(design, design_csv, base, "design")?;
                let y = vector_source(labels, labels_csv, base, "labels")?;
                (make_logistic_target(&x, &y, *lambda)?, hessian_lipschitz)
            }
        };
        match lipschitz {
            None => Ok(target),
            Some(LipschitzSpec::Value(l)) => target.with_hessian_lipschitz(*l),
            Some(LipschitzSpec::Keyword(k)) if k.eq_ignore_ascii_case("none") => {
                let c = target.component_constants();
                let stripped = Constants::new(c.strong_convexity, c.smoothness, None)?;
                Ok(target.with_component_constants(stripped))
            }
            Some(LipschitzSpec::Keyword(k)) => Err(Error::invalid(format!(
                "hessian_lipschitz must be a number or \"none\", got {k:?}"
            ))),
        }
    }
}

fn random_centers(n: usize, p: usize, seed: u64, scale: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (0..p)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                })
                .collect()
        })
        .collect()
}

fn matrix_source(inline: &Option<Vec<Vec<f64>>>, csv: &Option<PathBuf>, base: &Path, what: &str) -> Result<Vec<Vec<f64>>> {
    match (inline, csv) {
        (Some(m), None) => Ok(m.clone()),
        (None, Some(path)) => read_csv_matrix(&base.join(path)),
        _ => Err(Error::invalid(format!("give exactly one of `{what}` and `{what}_csv`"))),
    }
}

fn vector_source(inline: &Option<Vec<f64>>, csv: &Option<PathBuf>, base: &Path, what: &str) -> Result<Vec<f64>> {
    match (inline, csv) {
        (Some(v), None) => Ok(v.clone()),
        (None, Some(path)) => {
            let rows = read_csv_matrix(&base.join(path))?;
            match rows.as_slice() {
                [single] => Ok(single.clone()),
                _ if rows.iter().all(|r| r.len() == 1) => Ok(rows.into_iter().map(|r| r[0]).collect()),
                _ => Err(Error::invalid(format!("{} must hold a single row or column", path.display()))),
            }
        }
        _ => Err(Error::invalid(format!("give exactly one of `{what}` and `{what}_csv`"))),
    }
}

/// Row-major numeric CSV. A first row that does not parse as numbers is
/// taken as a header.
pub fn read_csv_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(f64::from_str).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::invalid(format!("{}: row {}: {e}", path.display(), i + 1)));
            }
        }
    }
    Ok(rows)
}

/// Experiment description. Either `epsilon` (planning) or both `h` and `K`
/// (manual parameters) must be present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub sampler: Option<SamplerKind>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub theorem: Option<String>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default, rename = "K", alias = "k")]
    pub k: Option<u64>,
    #[serde(default)]
    pub chains: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub checkpoints: Option<Vec<u64>>,
    /// Starting point; the origin when absent.
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: Self = serde_json::from_str(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    /// Applies command-line flags, which take precedence.
    pub fn apply(&mut self, args: &RunArgs) -> Result<()> {
        if let Some(s) = &args.sampler {
            self.sampler = Some(parse_sampler(s)?);
        }
        macro_rules! set {
            ($($field:ident <- $flag:ident),*) => {
                $(if let Some(v) = &args.$flag { self.$field = Some(v.clone()); })*
            };
        }
        set!(seed <- seed, epsilon <- eps, chains <- chains, out <- out, theorem <- theorem,
             checkpoints <- checkpoints, h <- h, b <- b, k <- k);
        Ok(())
    }

    pub fn build_target(&self) -> Result<DecomposableTarget> {
        self.target
            .as_ref()
            .ok_or_else(|| Error::invalid("a target description is required (--config)"))?
            .build(&self.base_dir)
    }

    fn theta0(&self, p: usize) -> Result<Vec<f64>> {
        match &self.theta0 {
            Some(t) if t.len() != p => Err(Error::invalid(format!("theta0 has length {}, target dimension is {p}", t.len()))),
            Some(t) => Ok(t.clone()),
            None => Ok(vec![0.0; p]),
        }
    }
}

fn parse_sampler(s: &str) -> Result<SamplerKind> {
    match s.replace('-', "_").as_str() {
        "lmc" => Ok(SamplerKind::Lmc),
        "sgd_idealized" | "sgd" => Ok(SamplerKind::SgdIdealized),
        "sgd_minibatch" | "minibatch" => Ok(SamplerKind::SgdMinibatch),
        other => Err(Error::invalid(format!("unknown sampler {other:?}"))),
    }
}

fn load_run_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    config.apply(args)?;
    Ok(config)
}

// ---------------------------------------------------------------------------
// plan

fn requested_theorem(config: &ExperimentConfig) -> Result<Option<Theorem>> {
    match config.theorem.as_deref() {
        None | Some("best") | Some("auto") => Ok(None),
        Some(name) => name.parse().map(Some),
    }
}

fn plan_for(theorem: Theorem, epsilon: f64, target: &DecomposableTarget, f0: f64) -> Result<Plan> {
    match theorem {
        Theorem::SgdFirstOrder => plan_sgd_first_order(epsilon, target, f0),
        Theorem::SgdSecondOrder => plan_sgd_second_order(epsilon, target, f0),
        Theorem::LmcFirstOrder => plan_lmc(epsilon, &target.constants(), target.dim(), f0),
        Theorem::LmcSecondOrder => Err(Error::invalid(
            "no planner for lmc_second_order; use lmc_first_order, first-order or second-order",
        )),
    }
}

fn plan_entry(theorem: Theorem, outcome: &Result<Plan>) -> Value {
    match outcome {
        Ok(plan) => serde_json::to_value(plan).expect("serializable"),
        Err(e) => {
            let mut v = json!({ "theorem": theorem, "error": e.kind(), "message": e.to_string() });
            if let Error::Infeasible(conditions) = e {
                v["conditions"] = serde_json::to_value(conditions).expect("serializable");
            }
            v
        }
    }
}

/// Prints every applicable plan and the best one; exit 0 iff one is valid.
pub fn cmd_plan(config: &ExperimentConfig) -> Result<CommandOutput> {
    let target = config.build_target()?;
    let epsilon = config
        .epsilon
        .ok_or_else(|| Error::invalid("epsilon is required for planning (--eps)"))?;
    let theta0 = config.theta0(target.dim())?;
    let f0 = potential_at(&target, &theta0)?;
    let outcomes: Vec<(Theorem, Result<Plan>)> = match requested_theorem(config)? {
        None => candidate_plans(epsilon, &target, f0),
        Some(t) => vec![(t, plan_for(t, epsilon, &target, f0))],
    };
    let plans: Vec<Value> = outcomes.iter().map(|(t, o)| plan_entry(*t, o)).collect();
    let best = outcomes
        .iter()
        .filter_map(|(_, o)| o.as_ref().ok())
        .fold(None::<&Plan>, |acc, p| match acc {
            Some(a) if a.budget <= p.budget => Some(a),
            _ => Some(p),
        });
    let code = if best.is_some() {
        0
    } else if outcomes.iter().any(|(_, o)| matches!(o, Err(Error::NumericFailure { .. }))) {
        3
    } else {
        2
    };
    let report = json!({
        "epsilon": epsilon,
        "f_theta0": f0,
        "plans": plans,
        "best": best,
    });
    let mut out = CommandOutput::json(code, &report);
    if code != 0 {
        for (_, o) in &outcomes {
            if let Err(e) = o {
                out.stderr.push_str(&format!("error: {e}\n"));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// sample

/// Sampler, step count and (when planned) the plan behind them.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub sampler: SamplerConfig,
    pub k: u64,
    pub plan: Option<Plan>,
}

/// Resolves the sampler and `K`, planning from `theta0` unless both `h`
/// and `K` are given.
pub fn resolve_run(config: &ExperimentConfig, target: &DecomposableTarget, theta0: &[f64]) -> Result<ResolvedRun> {
    let manual = config.h.is_some() && config.k.is_some();
    let plan = match (config.epsilon, manual) {
        (_, true) => None,
        (Some(eps), false) => Some({
            let f0 = potential_at(target, theta0)?;
            match requested_theorem(config)? {
                None => best_plan(eps, target, f0)?,
                Some(t) => plan_for(t, eps, target, f0)?,
            }
        }),
        (None, false) => {
            return Err(Error::invalid("set epsilon to plan, or both h and K for a manual run"));
        }
    };
    let kind = config.sampler.unwrap_or(match &plan {
        Some(p) if matches!(p.theorem, Theorem::LmcFirstOrder | Theorem::LmcSecondOrder) => SamplerKind::Lmc,
        Some(_) => SamplerKind::SgdIdealized,
        None if config.b.is_some() => SamplerKind::SgdIdealized,
        None => SamplerKind::Lmc,
    });
    let h = config.h.or(plan.as_ref().map(|p| p.h_eff)).expect("manual or planned");
    let k = config.k.or(plan.as_ref().map(|p| p.k)).expect("manual or planned");
    let planned_b = plan
        .as_ref()
        .filter(|p| matches!(p.theorem, Theorem::SgdFirstOrder | Theorem::SgdSecondOrder))
        .map(|p| p.b as f64);
    let b = config.b.or(planned_b);
    let sampler = match kind {
        SamplerKind::Lmc => SamplerConfig::lmc(h),
        SamplerKind::SgdIdealized => {
            SamplerConfig::sgd_idealized(h, b.ok_or_else(|| Error::invalid("the sgd_idealized sampler needs b"))?)
        }
        SamplerKind::SgdMinibatch => {
            let b = b.ok_or_else(|| Error::invalid("the sgd_minibatch sampler needs b"))?;
            if b.fract() != 0.0 || b < 1.0 {
                return Err(Error::invalid(format!("sgd_minibatch needs a positive integer b, got {b}")));
            }
            SamplerConfig::sgd_minibatch(h, b as usize)
        }
    };
    sampler.validate(target)?;
    Ok(ResolvedRun { sampler, k, plan })
}

#[derive(Debug, Clone, Serialize)]
struct FailedChain {
    chain_id: usize,
    kind: &'static str,
    step: Option<u64>,
    message: String,
}

#[derive(Debug, Clone, Serialize)]
struct CheckpointSummary {
    k: u64,
    chains: usize,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    /// W₂ between the exact law of the iterate and π.
    w2_exact: Option<f64>,
    /// W₂ between the chains (at most the first 4096) and as many draws of π.
    w2_empirical: Option<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// `{:.16e}`: 17 significant digits, which round-trips every `f64`.
fn push_csv_row(buf: &mut String, chain: usize, k: u64, theta: &[f64]) {
    use std::fmt::Write as _;
    write!(buf, "{chain},{k}").expect("string write");
    for v in theta {
        write!(buf, ",{v:.16e}").expect("string write");
    }
    buf.push('\n');
}

fn csv_header(p: usize) -> String {
    let mut s = String::from("chain_id,k");
    for j in 1..=p {
        s.push_str(&format!(",theta_{j}"));
    }
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Runs the chains and writes `samples.csv` (final iterates),
/// `trajectory.csv` (when checkpoints are requested) and `summary.json`.
pub fn cmd_sample(config: &ExperimentConfig) -> Result<CommandOutput> {
    let target = config.build_target()?;
    let p = target.dim();
    let theta0 = config.theta0(p)?;
    let run = resolve_run(config, &target, &theta0)?;
    let f0 = target.value(&theta0);
    let out_dir = config
        .out
        .as_ref()
        .ok_or_else(|| Error::invalid("an output directory is required (--out)"))?;
    let chains = config.chains.unwrap_or(1);
    if chains == 0 {
        return Err(Error::invalid("chains must be >= 1"));
    }
    let seed = config.seed.unwrap_or(0);
    let mut checkpoints = config.checkpoints.clone().unwrap_or_default();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    if let Some(&bad) = checkpoints.iter().find(|&&c| c > run.k) {
        return Err(Error::invalid(format!("checkpoint {bad} exceeds K = {}", run.k)));
    }
    let recording = if checkpoints.is_empty() {
        Recording::None
    } else {
        Recording::At(checkpoints.clone())
    };

    let outcomes = run_chains(&run.sampler, &target, &theta0, run.k, seed, chains, &recording);
    let mut finished = Vec::with_capacity(chains);
    let mut failed = Vec::new();
    for (id, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => finished.push((id, r)),
            Err(Error::NumericFailure { step, theta }) => failed.push(FailedChain {
                chain_id: id,
                kind: "numeric-failure",
                step: Some(step),
                message: format!("non-finite iterate near {theta:?}"),
            }),
            Err(other) => return Err(other),
        }
    }

    fs::create_dir_all(out_dir)?;
    let mut samples = csv_header(p);
    for (id, r) in &finished {
        push_csv_row(&mut samples, *id, r.final_state.step(), r.final_state.theta());
    }
    write_file(&out_dir.join("samples.csv"), &samples)?;
    if !checkpoints.is_empty() {
        let mut trajectory = csv_header(p);
        for (id, r) in &finished {
            for point in &r.trajectory {
                push_csv_row(&mut trajectory, *id, point.step, &point.theta);
            }
        }
        write_file(&out_dir.join("trajectory.csv"), &trajectory)?;
    }

    let stationary = target.stationary_law();
    let chain_spec = match (run.sampler.kind, stationary.is_some()) {
        (SamplerKind::Lmc, true) => Some(AffineChainSpec::lmc(&target, run.sampler.step_size)?),
        (SamplerKind::SgdIdealized, true) => Some(AffineChainSpec::sgd_idealized(
            &target,
            run.sampler.step_size,
            run.sampler.batch_size.expect("validated"),
        )?),
        _ => None,
    };
    let mut summary_points = checkpoints.clone();
    if summary_points.last() != Some(&run.k) {
        summary_points.push(run.k);
    }
    let mut checkpoint_summaries = Vec::new();
    for &k in &summary_points {
        let points: Vec<Vec<f64>> = finished
            .iter()
            .map(|(_, r)| {
                if k == run.k {
                    r.final_state.theta().to_vec()
                } else {
                    r.trajectory.iter().find(|t| t.step == k).expect("recorded").theta.clone()
                }
            })
            .collect();
        checkpoint_summaries.push(summarize(k, &points, p, &theta0, stationary.as_ref(), chain_spec.as_ref(), seed)?);
    }

    let partial = !failed.is_empty();
    let summary = json!({
        "sampler": run.sampler,
        "h": run.sampler.step_size,
        "b": run.sampler.batch_size,
        "K": run.k,
        "epsilon": config.epsilon,
        "plan": run.plan,
        "chains": chains,
        "seed": seed,
        "theta0": theta0,
        "f_theta0": f0.is_finite().then_some(f0),
        "stationary": stationary.as_ref().map(|law| json!({ "mean": vec_of(law.mean()), "cov": rows(law.cov()) })),
        "checkpoints": checkpoint_summaries,
        "final": checkpoint_summaries.last(),
        "failed_chains": failed,
        "partial": partial,
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&summary)?);
    write_file(&out_dir.join("summary.json"), &text)?;
    let mut out = CommandOutput::json(if partial { 3 } else { 0 }, &summary);
    if partial {
        out.stderr = format!(
            "error: {} of {chains} chains hit a numeric failure; outputs are partial\n",
            failed.len()
        );
    }
    Ok(out)
}

fn summarize(
    k: u64,
    points: &[Vec<f64>],
    p: usize,
    theta0: &[f64],
    stationary: Option<&crate::gaussian::GaussianLaw>,
    chain_spec: Option<&AffineChainSpec>,
    seed: u64,
) -> Result<CheckpointSummary> {
    if points.is_empty() {
        return Ok(CheckpointSummary {
            k,
            chains: 0,
            mean: Vec::new(),
            cov: Vec::new(),
            w2_exact: None,
            w2_empirical: None,
        });
    }
    let set = SampleSet::from_rows(points)?;
    let w2_exact = match (stationary, chain_spec) {
        (Some(pi), Some(spec)) => Some(w2_gaussian(&gaussian_chain_law(spec, theta0, k)?, pi)?),
        _ => None,
    };
    let w2_empirical = match stationary {
        Some(pi) => {
            let used = points.len().min(MAX_EMPIRICAL_POINTS);
            let subset = SampleSet::from_rows(&points[..used])?;
            Some(w2_empirical_vs_gaussian(&subset, pi, 1, seed.wrapping_add(REFERENCE_SEED_OFFSET))?.mean)
        }
        None => None,
    };
    debug_assert_eq!(set.dim(), p);
    Ok(CheckpointSummary {
        k,
        chains: points.len(),
        mean: vec_of(&set.mean()),
        cov: rows(&set.covariance()),
        w2_exact,
        w2_empirical,
    })
}

// ---------------------------------------------------------------------------
// bound

/// Evaluates a bound; at `h = 2/(m+M)` the first-order result also reports
/// both branch formulas as a continuity check.
pub fn cmd_bound(args: &BoundArgs) -> Result<CommandOutput> {
    let theorem: Theorem = args.theorem.parse()?;
    let second_order = matches!(theorem, Theorem::LmcSecondOrder | Theorem::SgdSecondOrder);
    let (constants, p, config_f0) = match &args.config {
        Some(path) => {
            let config = ExperimentConfig::from_path(path)?;
            let target = config.build_target()?;
            let theta0 = config.theta0(target.dim())?;
            let f0 = target.value(&theta0);
            let c = target.constants();
            let c = Constants::new(
                args.m.unwrap_or(c.strong_convexity),
                args.smoothness.unwrap_or(c.smoothness),
                args.hessian_lipschitz.or(c.hessian_lipschitz),
            )?;
            (c, args.dim.unwrap_or(target.dim()), Some(f0))
        }
        None => {
            let m = args.m.ok_or_else(|| Error::invalid("--m is required without --config"))?;
            let big_m = args
                .smoothness
                .ok_or_else(|| Error::invalid("--smoothness is required without --config"))?;
            let p = args.dim.ok_or_else(|| Error::invalid("--dim is required without --config"))?;
            (Constants::new(m, big_m, args.hessian_lipschitz)?, p, None)
        }
    };
    let (w0, w0_source) = match (args.w0, args.f0.or(config_f0)) {
        (Some(w0), _) => (w0, "given"),
        (None, Some(f0)) => (w0_upper_bound(f0, constants.strong_convexity, p)?, "upper_bound_from_f0"),
        (None, None) => return Err(Error::invalid("give --w0, or --f0 to bound it")),
    };
    let bound = if second_order {
        lmc_bound_second_order(args.h, args.k, w0, &constants, p)?
    } else {
        lmc_bound_first_order(args.h, args.k, w0, &constants, p)?
    };
    let mut report = json!({
        "theorem": if second_order { Theorem::LmcSecondOrder } else { Theorem::LmcFirstOrder },
        "h": args.h,
        "K": args.k,
        "p": p,
        "constants": constants,
        "w0": w0,
        "w0_source": w0_source,
        "bound": bound,
    });
    let split = 2.0 / (constants.strong_convexity + constants.smoothness);
    if !second_order && (args.h - split).abs() <= 1e-12 * split {
        let small = lmc_bound_first_order_branch(args.h, args.k, w0, &constants, p, Branch::SmallStep)?;
        let large = lmc_bound_first_order_branch(args.h, args.k, w0, &constants, p, Branch::LargeStep)?;
        let difference = (small.total - large.total).abs();
        report["branch_check"] = json!({
            "split": split,
            "small_step": small.total,
            "large_step": large.total,
            "difference": difference,
            "agree": difference <= 1e-9 * small.total.abs().max(1.0),
        });
    }
    Ok(CommandOutput::json(0, &report))
}

// ---------------------------------------------------------------------------
// verify

/// Runs a suite; exit 0 iff every property passes.
pub fn cmd_verify(suite: &str, seed: u64) -> Result<CommandOutput> {
    let results = run_suite(suite, seed)?;
    let pass = results.iter().all(|r| r.pass);
    let report = json!({ "suite": suite, "seed": seed, "pass": pass, "results": results });
    let mut out = CommandOutput::json(if pass { 0 } else { 1 }, &report);
    for r in results.iter().filter(|r| !r.pass) {
        out.stderr.push_str(&format!(
            "FAIL [{}] {}: {} > {}\n",
            r.suite, r.property, r.value, r.threshold
        ));
    }
    Ok(out)
}
