mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fracvar::analysis::{corpus, Suite, SuiteConfig, SuiteReport};
use fracvar::expr::{parse, Bindings, Var};
use fracvar::fde::{comparison_trials, solve_fde, FdeProblem, Formulation, Rhs};
use fracvar::grid::GridFunction;
use fracvar::kernel::{KernelSpec, NormalizationFunction, OrderFunction, WarpFunction};
use fracvar::operators::{self, CaputoForm, ExponentAt, Operator, OperatorOptions, Scheme};
use fracvar::FracError;

use output::{Format, Row};

/// Variable-order fractional operators with Mittag-Leffler kernels.
///
/// Expressions use `+ - * / ^`, parentheses, `pi` and the functions
/// sin, cos, exp, ln, sqrt, abs. `--alpha` and `--psi` are functions of t,
/// `--norm` of alpha, `--f` of t and `--rhs` of t and u.
#[derive(Debug, Parser)]
#[command(name = "fracvar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case", tag = "command")]
enum Command {
    /// Apply a fractional derivative to f on a uniform grid.
    Deriv(DerivArgs),
    /// Apply a fractional integral to f on a uniform grid.
    Integral(IntegralArgs),
    /// Solve the Caputo-type equation D u = f(t, u).
    Solve(SolveArgs),
    /// Run numerical verification suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct KernelArgs {
    /// Order alpha(t) in (0, 1).
    #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
    alpha: String,
    /// Warp psi(t), increasing on [a, b].
    #[arg(long, default_value = "t", allow_hyphen_values = true)]
    psi: String,
    /// Normalization M(alpha) with M(0) = M(1) = 1.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    norm: String,
    /// Power gamma in the kernel argument.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Mittag-Leffler order beta.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Use gamma = beta = alpha(t) instead of --gamma and --beta.
    #[arg(long)]
    tied: bool,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    b: f64,
    /// Number of grid subintervals.
    #[arg(long, default_value_t = 512)]
    n: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
struct OutputArgs {
    /// Data file; without it data go to stdout and the summary to stderr.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum DerivOp {
    RlNs,
    CaputoNs,
    RlClassical,
    CaputoClassical,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum IntegralOp {
    RlIntegral,
    Aux1,
    Aux2,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum SchemeArg {
    Trapezoid,
    Midpoint,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum CaputoFormArg {
    AsPrinted,
    StandardPsi,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum ExponentAtArg {
    T,
    Tau,
}

#[derive(Debug, Clone, Args, Serialize)]
struct QuadArgs {
    #[arg(long, value_enum, default_value = "trapezoid")]
    scheme: SchemeArg,
    /// Add a per-node error estimate from the grid of spacing 2h.
    #[arg(long)]
    estimate_error: bool,
    /// Fail when the error estimate exceeds this value.
    #[arg(long)]
    error_budget: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct DerivArgs {
    #[arg(long, value_enum, default_value = "caputo_ns")]
    op: DerivOp,
    /// The function f(t).
    #[arg(long, allow_hyphen_values = true)]
    f: String,
    #[arg(long, value_enum, default_value = "as_printed")]
    caputo_form: CaputoFormArg,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    quad: QuadArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
struct IntegralArgs {
    #[arg(long, value_enum, default_value = "rl_integral")]
    op: IntegralOp,
    #[arg(long, allow_hyphen_values = true)]
    f: String,
    /// Where the order in the exponent of rl_integral is evaluated.
    #[arg(long, value_enum, default_value = "t")]
    exponent_at: ExponentAtArg,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    quad: QuadArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum FormulationArg {
    Regularized,
    Literal,
}

#[derive(Debug, Args, Serialize)]
struct SolveArgs {
    /// Right-hand side f(t, u).
    #[arg(long, allow_hyphen_values = true)]
    rhs: String,
    /// Initial value u(a).
    #[arg(long, allow_negative_numbers = true)]
    u0: f64,
    #[arg(long, value_enum, default_value = "regularized")]
    formulation: FormulationArg,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    /// Suite name, or `all`. Besides the analysis suites, `comparison` runs
    /// randomized comparison-principle cases through the solver.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Random trigonometric polynomials added to the built-in test functions.
    #[arg(long, default_value_t = 20)]
    random: usize,
    #[arg(long, default_value_t = SuiteConfig::DEFAULT_SEED)]
    seed: u64,
    /// Randomized cases for the comparison suite.
    #[arg(long, default_value_t = 100)]
    cases: usize,
    #[command(flatten)]
    kernel: KernelArgs,
    /// JSON file receiving the reports.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError {
            code: 1,
            msg: msg.into(),
        }
    }
}

fn is_validation(e: &FracError) -> bool {
    matches!(
        e,
        FracError::InvalidParam(_)
            | FracError::DomainError(_)
            | FracError::DegenerateGrid { .. }
            | FracError::HypothesisViolation(_)
            | FracError::Expr(_)
    )
}

/// Attributes a core error to the flag it came from.
fn flag(name: &'static str) -> impl Fn(FracError) -> CliError {
    move |e| CliError {
        code: if is_validation(&e) { 1 } else { 2 },
        msg: format!("{name}: {e}"),
    }
}

fn numerical(e: FracError) -> CliError {
    CliError {
        code: if is_validation(&e) { 1 } else { 2 },
        msg: e.to_string(),
    }
}

fn order_function(k: &KernelArgs) -> Result<OrderFunction, CliError> {
    let e = parse(&k.alpha, &[Var::T]).map_err(|e| flag("--alpha")(e.into()))?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=fracvar::kernel::SAMPLE_POINTS {
        let t = k.a + (k.b - k.a) * i as f64 / fracvar::kernel::SAMPLE_POINTS as f64;
        let v = e
            .eval(&Bindings::t(t))
            .map_err(|e| flag("--alpha")(e.into()))?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    OrderFunction::from_expr(&k.alpha, lo, hi).map_err(flag("--alpha"))
}

fn kernel_spec(k: &KernelArgs) -> Result<KernelSpec, CliError> {
    if !(k.a.is_finite() && k.b.is_finite() && k.a < k.b) {
        return Err(CliError::usage(format!(
            "--a/--b: need a < b, got [{}, {}]",
            k.a, k.b
        )));
    }
    let order = order_function(k)?;
    let warp = WarpFunction::from_expr(&k.psi).map_err(flag("--psi"))?;
    let norm = NormalizationFunction::from_expr(&k.norm).map_err(flag("--norm"))?;
    if k.tied {
        KernelSpec::tied(order, warp, norm, k.a, k.b).map_err(flag("--psi/--alpha"))
    } else {
        if !(k.gamma > 0.0 && k.gamma <= 1.0) {
            return Err(CliError::usage(format!(
                "--gamma: {} outside (0, 1]",
                k.gamma
            )));
        }
        if !(k.beta > 0.0 && k.beta <= 1.0) {
            return Err(CliError::usage(format!(
                "--beta: {} outside (0, 1]",
                k.beta
            )));
        }
        KernelSpec::new(k.gamma, k.beta, order, warp, norm, k.a, k.b).map_err(flag("--psi/--alpha"))
    }
}

fn grid_function(source: &str, k: &KernelArgs) -> Result<GridFunction, CliError> {
    let e = parse(source, &[Var::T]).map_err(|e| flag("--f")(e.into()))?;
    let d = e.derivative(Var::T);
    let h = (k.b - k.a) / k.n.max(1) as f64;
    let at = |ex: &fracvar::expr::Expr, i: usize| {
        let t = if i == k.n { k.b } else { k.a + i as f64 * h };
        ex.eval(&Bindings::t(t)).map_err(|e| flag("--f")(e.into()))
    };
    let values = (0..=k.n)
        .map(|i| at(&e, i))
        .collect::<Result<Vec<_>, _>>()?;
    let deriv = (0..=k.n)
        .map(|i| at(&d, i))
        .collect::<Result<Vec<_>, _>>()?;
    let g = GridFunction::from_values(k.a, k.b, values).map_err(flag("--n"))?;
    g.with_deriv_values(deriv).map_err(flag("--f"))
}

fn operator_options(q: &QuadArgs) -> OperatorOptions {
    OperatorOptions {
        scheme: match q.scheme {
            SchemeArg::Trapezoid => Scheme::ProductTrapezoid,
            SchemeArg::Midpoint => Scheme::ProductMidpoint,
        },
        estimate_error: q.estimate_error,
        error_budget: q.error_budget,
        ..OperatorOptions::default()
    }
}

fn rows(result: &operators::OperatorResult) -> Vec<Row> {
    let v = &result.values;
    (0..=v.n())
        .map(|i| Row {
            t: v.t(i),
            value: v.values()[i],
            estimate_error: result.node_errors.as_ref().map(|e| e[i]),
        })
        .collect()
}

fn run_operator(
    op: Operator,
    source: &str,
    kernel: &KernelArgs,
    opts: OperatorOptions,
    out: &OutputArgs,
    command: &Command,
) -> Result<(), CliError> {
    let spec = kernel_spec(kernel)?;
    let f = grid_function(source, kernel)?;
    let result = operators::apply(op, &spec, &f, &opts).map_err(numerical)?;
    let rows = rows(&result);
    let last = rows.last().expect("grid is non-empty");
    let summary = format!(
        "{op:?} at t = {}: {:.16e}{}",
        last.t,
        last.value,
        if opts.estimate_error || opts.error_budget.is_some() {
            format!(" (max error estimate {:.3e})", result.quad_error_estimate)
        } else {
            String::new()
        }
    );
    output::emit(command, &rows, out, &summary)
}

fn deriv(args: &DerivArgs, command: &Command) -> Result<(), CliError> {
    let op = match args.op {
        DerivOp::RlNs => Operator::RlNs,
        DerivOp::CaputoNs => Operator::CaputoNs,
        DerivOp::RlClassical => Operator::RlClassical,
        DerivOp::CaputoClassical => Operator::CaputoClassical,
    };
    let mut opts = operator_options(&args.quad);
    opts.caputo_form = match args.caputo_form {
        CaputoFormArg::AsPrinted => CaputoForm::AsPrinted,
        CaputoFormArg::StandardPsi => CaputoForm::StandardPsi,
    };
    run_operator(op, &args.f, &args.kernel, opts, &args.output, command)
}

fn integral(args: &IntegralArgs, command: &Command) -> Result<(), CliError> {
    let op = match args.op {
        IntegralOp::RlIntegral => Operator::RlIntegral,
        IntegralOp::Aux1 => Operator::Aux1,
        IntegralOp::Aux2 => Operator::Aux2,
    };
    let mut opts = operator_options(&args.quad);
    opts.exponent_at = match args.exponent_at {
        ExponentAtArg::T => ExponentAt::T,
        ExponentAtArg::Tau => ExponentAt::Tau,
    };
    run_operator(op, &args.f, &args.kernel, opts, &args.output, command)
}

fn solve(args: &SolveArgs, command: &Command) -> Result<(), CliError> {
    let spec = kernel_spec(&args.kernel)?;
    let rhs = Rhs::from_expr(&args.rhs).map_err(flag("--rhs"))?;
    let formulation = match args.formulation {
        FormulationArg::Regularized => Formulation::Regularized,
        FormulationArg::Literal => Formulation::Literal,
    };
    let problem = FdeProblem::new(spec, rhs, args.u0, args.kernel.n)
        .map_err(flag("--rhs/--u0/--n"))?
        .with_formulation(formulation);
    let report = solve_fde(&problem).map_err(numerical)?;
    let u = &report.solution;
    let rows: Vec<Row> = (0..=u.n())
        .map(|i| Row {
            t: u.t(i),
            value: u.values()[i],
            estimate_error: None,
        })
        .collect();
    let iters: usize = report.newton_iters.iter().sum();
    let summary = format!(
        "u({}) = {:.16e}\nnewton iterations: {iters} total, {} max per step\nresidual: {:.3e}\n|f(a, u0)|: {:.3e}",
        u.b(),
        u.values()[u.n()],
        report.newton_iters.iter().max().copied().unwrap_or(0),
        report.residual_norm,
        report.compatibility,
    );
    output::emit(command, &rows, &args.output, &summary)
}

fn verify(args: &VerifyArgs) -> Result<bool, CliError> {
    let spec = kernel_spec(&args.kernel)?;
    let cfg = SuiteConfig {
        grid_n: args.kernel.n,
        functions: corpus(args.seed, args.random),
        seed: args.seed,
        ..SuiteConfig::new(spec.clone())
    };
    let suites: Vec<Option<Suite>> = match args.suite.as_str() {
        "all" => Suite::ALL.into_iter().map(Some).chain([None]).collect(),
        "comparison" => vec![None],
        name => vec![Some(Suite::from_name(name).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
            CliError::usage(format!(
                "--suite: unknown suite `{name}` (expected all, comparison, {})",
                names.join(", ")
            ))
        })?)],
    };
    let mut reports = Vec::new();
    for s in suites {
        let report = match s {
            Some(s) => s.run(&cfg).map_err(numerical)?,
            None => comparison_report(&spec, args.kernel.n, args.cases, args.seed)?,
        };
        print!("{report}");
        reports.push(report);
    }
    let failures: usize = reports.iter().map(|r| r.failures.len()).sum();
    println!("{} suites, {failures} failures", reports.len());
    if let Some(path) = &args.out {
        output::write_json(
            path,
            &serde_json::json!({ "config": args, "reports": reports }),
        )?;
    }
    Ok(failures == 0)
}

fn comparison_report(
    spec: &KernelSpec,
    n: usize,
    cases: usize,
    seed: u64,
) -> Result<SuiteReport, CliError> {
    let trials = comparison_trials(spec, n, cases, seed).map_err(numerical)?;
    let failures = trials
        .violations
        .iter()
        .map(|(case, o)| fracvar::analysis::Failure {
            case: format!("case {case}: {o:?}"),
            observed: match o {
                fracvar::fde::ComparisonOutcome::Violation { value, .. } => *value,
                _ => 0.0,
            },
            bound: 0.0,
            margin: 0.0,
        })
        .collect();
    Ok(SuiteReport {
        suite_name: "comparison".into(),
        cases_run: trials.cases,
        failures,
        notes: vec![format!(
            "{} pass, {} premise not met",
            trials.passes, trials.not_applicable
        )],
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FRACVAR_THREADS") else {
        return Ok(());
    };
    let k: usize = v.trim().parse().ok().filter(|k| *k > 0).ok_or_else(|| {
        CliError::usage(format!(
            "FRACVAR_THREADS: expected a positive integer, got `{v}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .map_err(|e| CliError::usage(format!("FRACVAR_THREADS: {e}")))
}

fn run(args: Vec<String>) -> Result<u8, CliError> {
    let args = config::merge(args).map_err(CliError::usage)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return Ok(code);
        }
    };
    configure_threads()?;
    match &cli.command {
        Command::Deriv(a) => deriv(a, &cli.command).map(|_| 0),
        Command::Integral(a) => integral(a, &cli.command).map(|_| 0),
        Command::Solve(a) => solve(a, &cli.command).map(|_| 0),
        Command::Verify(a) => verify(a).map(|ok| if ok { 0 } else { 3 }),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
