//! `rssm`: command-line front end for the regular simplicial search library.
//!
//! Exit codes: 0 on success, 1 when a check fails (or a run ends abnormally),
//! 2 on usage errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rssm_core::complexity::{audit_trace, Case, ComplexityConstants};
use rssm_core::experiments::{run_scaling, ExperimentPlan, RuleTemplate};
use rssm_core::interp::{
    bound_report, dominance_sweep, g_matrix, BoundClass, BoundReport, DominanceReport, ErrorSign, Query, QueryKind,
};
use rssm_core::objective::{builtin_with, BuiltinParams, CurvatureClass, Objective, ObjectiveMeta, BUILTINS};
use rssm_core::solver::{
    run, AcceptanceRule, Algorithm, SolverConfig, Stopping, TerminalReason, Trace, SUMMARY_HEADER,
};
use rssm_core::{make_regular_simplex, Error, Point, Simplex};

#[derive(Parser)]
#[command(name = "rssm", version, about = "Regular simplicial search, interpolation bounds and complexity audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize a built-in objective.
    Solve(SolveArgs),
    /// Check the sharp interpolation bounds and their certificates on a simplex.
    VerifyBounds(VerifyArgs),
    /// Print the quadratic attaining the error bound for one query.
    WorstCase(WorstCaseArgs),
    /// Audit a theoretical-mode trace against the per-step guarantees.
    Audit(AuditArgs),
    /// Run a scaling experiment and write its CSV.
    Scaling(ScalingArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Theoretical,
    Practical,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Rssm,
    ReflectionOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum StoppingArg {
    SimplexGradient,
    TrueGradient,
    AverageGap,
    None,
}

impl From<StoppingArg> for Stopping {
    fn from(s: StoppingArg) -> Self {
        match s {
            StoppingArg::SimplexGradient => Stopping::SimplexGradient,
            StoppingArg::TrueGradient => Stopping::TrueGradient,
            StoppingArg::AverageGap => Stopping::AverageGap,
            StoppingArg::None => Stopping::None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryArg {
    Reflection,
    Centroid,
    Shrink,
}

impl From<QueryArg> for QueryKind {
    fn from(q: QueryArg) -> Self {
        match q {
            QueryArg::Reflection => QueryKind::Reflection,
            QueryArg::Centroid => QueryKind::Centroid,
            QueryArg::Shrink => QueryKind::Shrink,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Nonconvex,
    Convex,
}

impl From<ClassArg> for BoundClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Nonconvex => BoundClass::Nonconvex,
            ClassArg::Convex => BoundClass::Convex,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Positive,
    Negative,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Nonconvex,
    Pl,
    Convex,
    StronglyConvex,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::Nonconvex => Case::Nonconvex,
            CaseArg::Pl => Case::Pl,
            CaseArg::Convex => Case::Convex,
            CaseArg::StronglyConvex => Case::StronglyConvex,
        }
    }
}

/// Options shared by commands that build a built-in objective.
#[derive(Args)]
struct ObjectiveArgs {
    /// Built-in objective name, or `list` to print the registry.
    #[arg(long)]
    objective: String,
    /// Seed for objectives with random structure (quad-spectrum).
    #[arg(long)]
    objective_seed: Option<u64>,
    /// Override the objective's gradient Lipschitz constant where supported.
    #[arg(long = "obj-L")]
    objective_lipschitz: Option<f64>,
    /// Override the objective's strong-convexity constant where supported.
    #[arg(long = "obj-mu")]
    objective_mu: Option<f64>,
}

impl ObjectiveArgs {
    fn params(&self, seed: Option<u64>) -> BuiltinParams {
        BuiltinParams {
            lipschitz: self.objective_lipschitz,
            mu: self.objective_mu,
            x_star: None,
            seed: self.objective_seed.or(seed),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    objective: ObjectiveArgs,
    /// Dimension; inferred from --start when omitted.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    delta0: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = Mode::Practical)]
    mode: Mode,
    /// Acceptance scale in theoretical mode.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Acceptance scale in practical mode.
    #[arg(long, default_value_t = 1e-3)]
    eta: f64,
    /// Lipschitz constant for theoretical mode; defaults to the objective's certified value.
    #[arg(long = "L")]
    lipschitz: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Rssm)]
    algorithm: AlgorithmArg,
    #[arg(long, value_enum, default_value_t = StoppingArg::SimplexGradient)]
    stopping: StoppingArg,
    #[arg(long, default_value_t = 100_000)]
    max_iter: u64,
    #[arg(long, default_value_t = 1_000_000)]
    max_evals: u64,
    /// Comma-separated centroid of the initial simplex (default: all ones).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    start: Option<Vec<f64>>,
    /// Write the full trace as JSON.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Print only the summary CSV line.
    #[arg(long)]
    summary: bool,
    /// Also print the summary CSV header.
    #[arg(long, requires = "summary")]
    header: bool,
}

/// A simplex given as JSON or generated as a regular simplex around a centre.
#[derive(Args)]
struct SimplexArgs {
    /// Simplex JSON file: {"dim": n, "radius": r, "vertices": [[...], ...]}.
    #[arg(long, conflicts_with_all = ["n", "radius", "center"])]
    simplex: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Comma-separated centre (default: origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Option<Vec<f64>>,
}

impl SimplexArgs {
    fn build(&self) -> Result<Simplex, CliError> {
        if let Some(path) = &self.simplex {
            let text = read(path)?;
            return serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())));
        }
        let n = match (self.n, &self.center) {
            (Some(n), _) => n,
            (None, Some(c)) => c.len(),
            (None, None) => return Err(CliError::Usage("give --simplex, --n or --center".into())),
        };
        let center = match &self.center {
            Some(c) if c.len() != n => {
                return Err(CliError::Usage(format!("--center has {} entries, --n is {n}", c.len())))
            }
            Some(c) => Point::from_vec(c.clone()),
            None => Point::zeros(n),
        };
        Ok(make_regular_simplex(&center, self.radius, n)?)
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    simplex: SimplexArgs,
    #[arg(long = "L", default_value_t = 1.0)]
    lipschitz: f64,
    /// Shrink factor for the shrink query.
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Random quadratics per dominance check.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct WorstCaseArgs {
    #[command(flatten)]
    simplex: SimplexArgs,
    #[arg(long, value_enum, default_value_t = QueryArg::Reflection)]
    query: QueryArg,
    #[arg(long, value_enum, default_value_t = ClassArg::Nonconvex)]
    class: ClassArg,
    #[arg(long = "L", default_value_t = 1.0)]
    lipschitz: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Sign of the error to maximize (default: the larger side).
    #[arg(long, value_enum)]
    sign: Option<SignArg>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    trace_in: PathBuf,
    #[arg(long, value_enum)]
    case: CaseArg,
    /// Must match the Lipschitz constant the trace was run with, if given.
    #[arg(long = "L")]
    lipschitz: Option<f64>,
    /// PL or strong-convexity constant.
    #[arg(long)]
    mu: Option<f64>,
    /// Radius of the initial sublevel set; required for the convex cases.
    #[arg(long = "R")]
    radius: Option<f64>,
    #[arg(long)]
    fstar: Option<f64>,
    #[arg(long, default_value_t = rssm_core::complexity::DEFAULT_ETA_SPLIT)]
    eta_split: f64,
}

#[derive(Args)]
struct ScalingArgs {
    /// Experiment plan JSON; replaces the grid flags below.
    #[arg(long, conflicts_with_all = ["objective", "dims"])]
    plan: Option<PathBuf>,
    #[arg(long)]
    objective: Option<String>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Largest tolerance of the geometric grid.
    #[arg(long, default_value_t = 1e-1)]
    eps_from: f64,
    #[arg(long, default_value_t = 0.1)]
    eps_ratio: f64,
    #[arg(long, default_value_t = 6)]
    eps_count: usize,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    start_half_width: f64,
    #[arg(long, default_value_t = 1.0)]
    delta0: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = Mode::Theoretical)]
    mode: Mode,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 1e-3)]
    eta: f64,
    /// Default: true gradient for nonconvex objectives, average gap for convex ones.
    #[arg(long, value_enum)]
    stopping: Option<StoppingArg>,
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: u64,
    #[arg(long, default_value_t = 10_000_000)]
    max_evals: u64,
    /// CSV destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the fitted exponents as JSON.
    #[arg(long)]
    fits_out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) => CliError::Usage(msg),
            other => CliError::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

/// Result of a command that ran to completion.
enum Verdict {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::VerifyBounds(a) => verify_bounds(a),
        Command::WorstCase(a) => worst_case(a),
        Command::Audit(a) => audit(a),
        Command::Scaling(a) => scaling(a),
    };
    match result {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Failed) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn list_objectives() -> Verdict {
    for (name, description) in BUILTINS {
        println!("{name:<14} {description}");
    }
    Verdict::Ok
}

fn solve(a: SolveArgs) -> Result<Verdict, CliError> {
    if a.objective.objective == "list" {
        return Ok(list_objectives());
    }
    let n = match (a.n, &a.start) {
        (Some(n), Some(s)) if s.len() != n => {
            return Err(CliError::Usage(format!("--start has {} entries, --n is {n}", s.len())))
        }
        (Some(n), _) => n,
        (None, Some(s)) => s.len(),
        (None, None) => return Err(CliError::Usage("give --n or --start".into())),
    };
    let objective = builtin_with(&a.objective.objective, n, &a.objective.params(None))?;
    let rule = match a.mode {
        Mode::Practical => AcceptanceRule::Practical { eta: a.eta },
        Mode::Theoretical => {
            let lipschitz = a.lipschitz.or(objective.metadata().lipschitz).ok_or_else(|| {
                CliError::Usage(format!("theoretical mode needs --L ({} has no certified L)", objective.name()))
            })?;
            AcceptanceRule::Theoretical { beta: a.beta, lipschitz }
        }
    };
    let cfg = SolverConfig {
        delta0: a.delta0,
        gamma: a.gamma,
        rule,
        epsilon: a.epsilon,
        max_iterations: a.max_iter,
        max_evaluations: a.max_evals,
        algorithm: match a.algorithm {
            AlgorithmArg::Rssm => Algorithm::Rssm,
            AlgorithmArg::ReflectionOnly => Algorithm::ReflectionOnly,
        },
        stopping: a.stopping.into(),
        ..SolverConfig::new(a.start.unwrap_or_else(|| vec![1.0; n]))
    };
    let trace = run(&objective, &cfg)?;
    if let Some(path) = &a.trace_out {
        fs::write(path, trace.to_json()?)?;
    }
    if a.summary {
        if a.header {
            println!("{SUMMARY_HEADER}");
        }
        println!("{}", trace.summary_line());
    } else {
        print_json(&serde_json::json!({
            "objective": trace.objective,
            "reason": trace.reason,
            "final": trace.last,
        }))?;
    }
    Ok(match trace.reason {
        TerminalReason::RegularityFailure => Verdict::Failed,
        _ => Verdict::Ok,
    })
}

#[derive(Serialize)]
struct VerifyEntry {
    report: BoundReport,
    dominance: DominanceReport,
    passed: bool,
}

fn verify_bounds(a: VerifyArgs) -> Result<Verdict, CliError> {
    let s = a.simplex.build()?;
    let n = s.dim();
    let mut entries = Vec::new();
    for kind in [QueryKind::Reflection, QueryKind::Centroid, QueryKind::Shrink] {
        for class in [BoundClass::Nonconvex, BoundClass::Convex] {
            let query = Query::standard(kind, n, a.gamma);
            let report = bound_report(&s, query, class, a.lipschitz)?;
            let dominance = dominance_sweep(&s, query, class, a.lipschitz, a.samples, a.seed)?;
            let attained = (report.achieved - report.bound).abs() <= 1e-9 * report.bound.abs().max(f64::MIN_POSITIVE);
            let certificate_ok = report.mu_certificate.as_ref().is_none_or(|m| m.sharp);
            let passed = attained && certificate_ok && dominance.violations == 0;
            entries.push(VerifyEntry { report, dominance, passed });
        }
    }
    let all = entries.iter().all(|e| e.passed);
    print_json(&serde_json::json!({ "dim": n, "radius": s.radius(), "passed": all, "reports": entries }))?;
    Ok(if all { Verdict::Ok } else { Verdict::Failed })
}

fn worst_case(a: WorstCaseArgs) -> Result<Verdict, CliError> {
    let s = a.simplex.build()?;
    let query = Query::standard(a.query.into(), s.dim(), a.gamma);
    let class: BoundClass = a.class.into();
    let report = bound_report(&s, query, class, a.lipschitz)?;
    let sign = match a.sign {
        Some(SignArg::Positive) => ErrorSign::Positive,
        Some(SignArg::Negative) => ErrorSign::Negative,
        None => report.worst_sign,
    };
    let x = query.point(&s)?;
    let g = g_matrix(&s, &x)?;
    let q = rssm_core::interp::worst_case_quadratic(&g, a.lipschitz, class, sign);
    let hessian: Vec<Vec<f64>> = q.h.row_iter().map(|r| r.iter().copied().collect()).collect();
    let achieved = {
        let coeffs = rssm_core::interp::lagrange_coefficients(&s, &x)?;
        rssm_core::interp::interpolation_error(&s, &x, &coeffs, |u| q.evaluate(u))
    };
    print_json(&serde_json::json!({
        "query": query,
        "class": class,
        "sign": sign,
        "lipschitz": a.lipschitz,
        "query_point": x.as_slice(),
        "hessian": hessian,
        "spectral_norm": q.spectral_norm(),
        "bound": report.bound,
        "closed_form": report.closed_form,
        "signed_error": achieved,
    }))?;
    Ok(Verdict::Ok)
}

fn audit(a: AuditArgs) -> Result<Verdict, CliError> {
    let case: Case = a.case.into();
    let convex = matches!(case, Case::Convex | Case::StronglyConvex);
    if convex && a.radius.is_none() {
        return Err(CliError::Usage("--R is required for the convex and strongly-convex cases".into()));
    }
    if matches!(case, Case::StronglyConvex | Case::Pl) && a.mu.is_none() {
        return Err(CliError::Usage("--mu is required for the PL and strongly-convex cases".into()));
    }
    let trace = Trace::from_json(&read(&a.trace_in)?).map_err(|e| CliError::Usage(format!("bad trace: {e}")))?;
    let AcceptanceRule::Theoretical { lipschitz, .. } = trace.config.rule else {
        return Err(CliError::Usage("audits need a theoretical-mode trace".into()));
    };
    if let Some(l) = a.lipschitz {
        if l != lipschitz {
            return Err(CliError::Usage(format!("--L {l} differs from the trace's L = {lipschitz}")));
        }
    }
    let meta = ObjectiveMeta {
        lipschitz: Some(lipschitz),
        mu: a.mu,
        f_star: a.fstar,
        x_star: None,
        class: match case {
            Case::Nonconvex => CurvatureClass::Nonconvex,
            Case::Pl => CurvatureClass::Pl,
            Case::Convex => CurvatureClass::Convex,
            Case::StronglyConvex => CurvatureClass::StronglyConvex,
        },
    };
    let consts = ComplexityConstants::for_trace(&trace, &meta, a.radius, a.eta_split)?;
    let report = audit_trace(&trace, &meta, &consts, case)?;
    print_json(&report)?;
    Ok(if report.passed() { Verdict::Ok } else { Verdict::Failed })
}

fn scaling(a: ScalingArgs) -> Result<Verdict, CliError> {
    let plan = match &a.plan {
        Some(path) => serde_json::from_str::<ExperimentPlan>(&read(path)?)
            .map_err(|e| CliError::Usage(format!("bad plan: {e}")))?,
        None => {
            let objective = a.objective.clone().ok_or_else(|| CliError::Usage("give --plan or --objective".into()))?;
            let dims = a.dims.clone().ok_or_else(|| CliError::Usage("give --dims".into()))?;
            let probe = builtin_with(&objective, dims.first().copied().unwrap_or(1).max(1), &BuiltinParams::default())?;
            let stopping = match a.stopping {
                Some(s) => s.into(),
                None if probe.metadata().class.is_convex() => Stopping::AverageGap,
                None => Stopping::TrueGradient,
            };
            ExperimentPlan {
                objective,
                params: BuiltinParams::default(),
                dims,
                epsilons: ExperimentPlan::geometric_epsilons(a.eps_from, a.eps_ratio, a.eps_count),
                repetitions: a.repetitions,
                base_seed: a.seed,
                start_half_width: a.start_half_width,
                delta0: a.delta0,
                gamma: a.gamma,
                rule: match a.mode {
                    Mode::Theoretical => RuleTemplate::Theoretical { beta: a.beta },
                    Mode::Practical => RuleTemplate::Practical { eta: a.eta },
                },
                stopping,
                max_iterations: a.max_iter,
                max_evaluations: a.max_evals,
            }
        }
    };
    let result = run_scaling(&plan)?;
    match &a.out {
        Some(path) => result.write_csv(path)?,
        None => print!("{}", result.to_csv()?),
    }
    if let Some(path) = &a.fits_out {
        fs::write(path, serde_json::to_string_pretty(&result.fits)?)?;
    }
    for row in &result.excluded {
        eprintln!(
            "excluded from fits: n={} epsilon={:e} seed={} ({})",
            row.n,
            row.epsilon,
            row.seed,
            row.reason.as_str()
        );
    }
    for fit in &result.fits {
        let fmt = |f: Option<rssm_core::experiments::LinearFit>| {
            f.map_or("n/a".to_string(), |f| format!("slope {:.4}, r {:.4}", f.slope, f.correlation))
        };
        eprintln!("n={}: power law {}; semilog {}", fit.n, fmt(fit.power_law), fmt(fit.semilog));
    }
    Ok(Verdict::Ok)
}
