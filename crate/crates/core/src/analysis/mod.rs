//! Numerical checks of the boundedness, Lipschitz, limit and extremum
//! properties of the non-singular operators.
//!
//! Each suite runs over a corpus of test functions and returns a
//! [`SuiteReport`]; a failure records the case, the observed value, the bound
//! it was held to and the margin by which it was missed.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::grid::GridFunction;
use crate::kernel::{KernelOrders, KernelSpec, OrderFunction};
use crate::operators::{apply, Operator, OperatorOptions};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Smallest order used when approaching either end of (0, 1).
pub const MIN_EPSILON: f64 = 1e-8;

/// A smooth test function with its derivative.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    f: ScalarFn,
    df: ScalarFn,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("TestFunction").field(&self.name).finish()
    }
}

impl TestFunction {
    pub fn new<F, D>(name: impl Into<String>, f: F, df: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        TestFunction {
            name: name.into(),
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        (self.df)(t)
    }

    pub fn grid(&self, a: f64, b: f64, n: usize) -> Result<GridFunction> {
        let (f, df) = (self.f.clone(), self.df.clone());
        GridFunction::with_deriv(a, b, n, move |t| f(t), move |t| df(t))
    }

    /// `c + Σ_k (a_k cos kt + b_k sin kt)` with coefficients in [-1, 1] and
    /// degree between 1 and `max_degree`.
    pub fn random_trig(rng: &mut impl Rng, max_degree: usize, name: impl Into<String>) -> Self {
        let degree = rng.random_range(1..=max_degree);
        let c0: f64 = rng.random_range(-1.0..1.0);
        let coef: Vec<(f64, f64)> = (0..degree)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let c1 = coef.clone();
        TestFunction::new(
            name,
            move |t| {
                c0 + c1
                    .iter()
                    .enumerate()
                    .map(|(k, (a, b))| {
                        let w = (k + 1) as f64;
                        a * (w * t).cos() + b * (w * t).sin()
                    })
                    .sum::<f64>()
            },
            move |t| {
                coef.iter()
                    .enumerate()
                    .map(|(k, (a, b))| {
                        let w = (k + 1) as f64;
                        w * (b * (w * t).cos() - a * (w * t).sin())
                    })
                    .sum()
            },
        )
    }
}

/// `1, t, t², sin πt, cos t, e^t`.
pub fn builtin_functions() -> Vec<TestFunction> {
    use std::f64::consts::PI;
    vec![
        TestFunction::new("1", |_| 1.0, |_| 0.0),
        TestFunction::new("t", |t| t, |_| 1.0),
        TestFunction::new("t^2", |t| t * t, |t| 2.0 * t),
        TestFunction::new("sin(pi t)", |t| (PI * t).sin(), |t| PI * (PI * t).cos()),
        TestFunction::new("cos(t)", f64::cos, |t| -t.sin()),
        TestFunction::new("exp(t)", f64::exp, f64::exp),
    ]
}

/// Seeded trigonometric polynomials of degree at most 6.
pub fn random_functions(seed: u64, count: usize) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| TestFunction::random_trig(&mut rng, 6, format!("trig#{i}")))
        .collect()
}

/// The built-in functions followed by `random` seeded trigonometric polynomials.
pub fn corpus(seed: u64, random: usize) -> Vec<TestFunction> {
    let mut v = builtin_functions();
    v.extend(random_functions(seed, random));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative slack on the boundedness constant.
    pub boundedness: f64,
    /// Allowed relative change of the Lipschitz ratio between `n` and `2n`.
    pub lipschitz: f64,
    /// Relative slack on the interchange bound, and absolute floor for gaps.
    pub interchange: f64,
    /// Required size of every gap at the end of the sequence.
    pub interchange_final: f64,
    /// Distance from the α → 0 limits.
    pub axiom: f64,
    /// Kernel distance from 1 as a multiple of ε.
    pub kernel_slope: f64,
    pub max_point: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            boundedness: 1e-9,
            lipschitz: 0.05,
            interchange: 1e-9,
            interchange_final: 1e-9,
            axiom: 1e-3,
            kernel_slope: 100.0,
            max_point: 1e-6,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let all = [
            self.boundedness,
            self.lipschitz,
            self.interchange,
            self.interchange_final,
            self.axiom,
            self.kernel_slope,
            self.max_point,
        ];
        if all.iter().all(|t| *t > 0.0 && t.is_finite()) {
            Ok(())
        } else {
            Err(FracError::invalid("all tolerances must be positive"))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub spec: KernelSpec,
    pub grid_n: usize,
    pub functions: Vec<TestFunction>,
    /// Small orders ε at which the α → 0 limits are asserted.
    pub epsilons: Vec<f64>,
    /// Values of ε at which the trend of order 1 - ε is reported.
    pub near_one: Vec<f64>,
    /// Length of the Taylor sequence in the interchange suite.
    pub seq_len: usize,
    /// Number of random pairs in the Lipschitz suite.
    pub pairs: usize,
    /// Grids for the first-node scaling in the vanishing suite.
    pub refinements: Vec<usize>,
    pub seed: u64,
    pub tol: Tolerances,
}

impl SuiteConfig {
    pub const DEFAULT_SEED: u64 = 20240607;

    /// Corpus of the built-in functions and 20 random ones, n = 512.
    pub fn new(spec: KernelSpec) -> Self {
        SuiteConfig {
            spec,
            grid_n: 512,
            functions: corpus(Self::DEFAULT_SEED, 20),
            epsilons: vec![1e-4, 1e-6],
            near_one: vec![1e-1, 1e-2, 1e-3],
            seq_len: 16,
            pairs: 50,
            refinements: vec![256, 512, 1024],
            seed: Self::DEFAULT_SEED,
            tol: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seq_len < 8 {
            return Err(FracError::invalid(format!(
                "seq_len = {} must be at least 8",
                self.seq_len
            )));
        }
        if self.functions.is_empty() {
            return Err(FracError::invalid("no test functions"));
        }
        if self.refinements.len() < 2 {
            return Err(FracError::invalid("need at least two refinement levels"));
        }
        if let Some(e) = self
            .epsilons
            .iter()
            .chain(&self.near_one)
            .find(|e| !(**e > 0.0 && **e < 0.5))
        {
            return Err(FracError::invalid(format!("epsilon {e} outside (0, 1/2)")));
        }
        self.tol.validate()
    }

    fn grid(&self, f: &TestFunction, n: usize) -> Result<GridFunction> {
        let (a, b) = self.spec.interval();
        f.grid(a, b, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub case: String,
    pub observed: f64,
    pub bound: f64,
    /// `observed - bound` in the direction of the violation (positive).
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite_name: String,
    pub cases_run: usize,
    pub failures: Vec<Failure>,
    /// Measurements that are reported without being asserted.
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport {
            suite_name: name.into(),
            cases_run: 0,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Records a case that must satisfy `observed ≤ bound`.
    fn at_most(&mut self, case: String, observed: f64, bound: f64) {
        self.cases_run += 1;
        if !(observed <= bound) {
            self.failures.push(Failure {
                case,
                observed,
                bound,
                margin: observed - bound,
            });
        }
    }

    /// Records a case that must satisfy `observed ≥ bound`.
    fn at_least(&mut self, case: String, observed: f64, bound: f64) {
        self.cases_run += 1;
        if !(observed >= bound) {
            self.failures.push(Failure {
                case,
                observed,
                bound,
                margin: bound - observed,
            });
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {} cases, {} failures",
            self.suite_name,
            self.cases_run,
            self.failures.len()
        )?;
        for x in &self.failures {
            writeln!(
                f,
                "  FAIL {}: observed {:.6e}, bound {:.6e}, margin {:.3e}",
                x.case, x.observed, x.bound, x.margin
            )?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Boundedness,
    Lipschitz,
    LimitInterchange,
    AxiomLimits,
    MaxPoint,
    VanishAtA,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Boundedness,
        Suite::Lipschitz,
        Suite::LimitInterchange,
        Suite::AxiomLimits,
        Suite::MaxPoint,
        Suite::VanishAtA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Boundedness => "boundedness",
            Suite::Lipschitz => "lipschitz",
            Suite::LimitInterchange => "limit_interchange",
            Suite::AxiomLimits => "axiom_limits",
            Suite::MaxPoint => "max_point",
            Suite::VanishAtA => "vanish_at_a",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn run(self, cfg: &SuiteConfig) -> Result<SuiteReport> {
        match self {
            Suite::Boundedness => check_boundedness(cfg),
            Suite::Lipschitz => check_lipschitz(cfg),
            Suite::LimitInterchange => check_limit_interchange(cfg),
            Suite::AxiomLimits => check_axiom_limits(cfg),
            Suite::MaxPoint => check_max_point(cfg),
            Suite::VanishAtA => check_vanish_at_a(cfg),
        }
    }
}

const DERIVATIVES: [Operator; 2] = [Operator::RlNs, Operator::CaputoNs];

fn op_name(op: Operator) -> &'static str {
    match op {
        Operator::RlNs => "rl",
        Operator::CaputoNs => "caputo",
        Operator::Aux1 => "aux1",
        Operator::Aux2 => "aux2",
        Operator::RlIntegral => "rl_integral",
        Operator::RlClassical => "rl_classical",
        Operator::CaputoClassical => "caputo_classical",
    }
}

fn run_op(op: Operator, spec: &KernelSpec, f: &GridFunction) -> Result<GridFunction> {
    Ok(apply(op, spec, f, &OperatorOptions::default())?.values)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// `M(α(b)) / (1 - α(b))`.
pub fn boundedness_constant(spec: &KernelSpec) -> Result<f64> {
    spec.prefactor(spec.interval().1)
}

/// `‖𝔇f‖ ≤ M(α(b))/(1 - α(b)) ‖f‖` for both operator types.
pub fn check_boundedness(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let k = boundedness_constant(&cfg.spec)?;
    let rows = cfg
        .functions
        .par_iter()
        .map(|tf| {
            let g = cfg.grid(tf, cfg.grid_n)?;
            let norm = g.max_abs();
            DERIVATIVES
                .iter()
                .map(|&op| {
                    Ok((
                        format!("{} {}", op_name(op), tf.name()),
                        sup(run_op(op, &cfg.spec, &g)?.values()),
                        k * norm,
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = SuiteReport::new(Suite::Boundedness.name());
    for (case, observed, bound) in rows.into_iter().flatten() {
        report.at_most(case, observed, bound * (1.0 + cfg.tol.boundedness));
    }
    Ok(report)
}

/// `H(b, a) (b - a) M(α(b))/(1 - α(b))`, the Lipschitz constant without θ₁.
pub fn lipschitz_factor(spec: &KernelSpec) -> Result<f64> {
    let (a, b) = spec.interval();
    Ok(spec.prefactor(b)? * spec.eval(b, a)? * (b - a))
}

/// Empirical ratio `‖𝔇f - 𝔇g‖ / ‖f - g‖`; `DegenerateCase` when `f ≈ g`.
pub fn lipschitz_ratio(
    op: Operator,
    spec: &KernelSpec,
    f: &GridFunction,
    g: &GridFunction,
) -> Result<f64> {
    let den = sup_diff(f.values(), g.values());
    if den < 1e-14 {
        return Err(FracError::DegenerateCase(format!("|f - g| = {den:e}")));
    }
    let df = run_op(op, spec, f)?;
    let dg = run_op(op, spec, g)?;
    Ok(sup_diff(df.values(), dg.values()) / den)
}

/// Lipschitz ratios over random pairs on grids `n` and `2n`. The ratio must
/// be finite and change by at most the configured fraction under refinement;
/// the implied θ₁ is reported.
pub fn check_lipschitz(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = cfg.functions.len();
    let pairs: Vec<(usize, usize)> = (0..cfg.pairs)
        .map(|_| (rng.random_range(0..m), rng.random_range(0..m)))
        .collect();
    let results = pairs
        .par_iter()
        .flat_map_iter(|&(i, j)| DERIVATIVES.iter().map(move |&op| (i, j, op)))
        .map(|(i, j, op)| {
            let (fi, fj) = (&cfg.functions[i], &cfg.functions[j]);
            let ratio = |n| lipschitz_ratio(op, &cfg.spec, &cfg.grid(fi, n)?, &cfg.grid(fj, n)?);
            let case = format!("{} {} vs {}", op_name(op), fi.name(), fj.name());
            match (ratio(cfg.grid_n), ratio(2 * cfg.grid_n)) {
                (Err(FracError::DegenerateCase(_)), _) => Ok(None),
                (r1, r2) => Ok(Some((case, r1?, r2?))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = SuiteReport::new(Suite::Lipschitz.name());
    let mut skipped = 0;
    let mut worst = [0.0f64; 2];
    for r in results {
        let Some((case, r1, r2)) = r else {
            skipped += 1;
            continue;
        };
        report.at_most(format!("{case}: finite ratio"), r1, f64::MAX);
        report.at_most(
            format!("{case}: ratio change n -> 2n"),
            (r2 - r1).abs(),
            cfg.tol.lipschitz * r1.max(1e-12),
        );
        let k = usize::from(case.starts_with("caputo"));
        worst[k] = worst[k].max(r1.max(r2));
    }
    let factor = lipschitz_factor(&cfg.spec)?;
    report
        .notes
        .push(format!("{skipped} pairs with f = g skipped"));
    for (k, op) in DERIVATIVES.iter().enumerate() {
        report.notes.push(format!(
            "{}: max ratio {:.6e}, calibrated theta1 = {:.6e}",
            op_name(*op),
            worst[k],
            worst[k] / factor
        ));
    }
    Ok(report)
}

/// Distances between the images of `f_k` and of its limit under each operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequenceGap {
    pub k: usize,
    /// `‖f_k - f‖_∞`.
    pub data: f64,
    pub aux1: f64,
    pub aux2: f64,
    pub rl: f64,
    pub caputo: f64,
}

impl SequenceGap {
    fn largest(&self) -> f64 {
        self.aux1.max(self.aux2).max(self.rl).max(self.caputo)
    }
}

const GAP_OPS: [Operator; 4] = [
    Operator::Aux1,
    Operator::Aux2,
    Operator::RlNs,
    Operator::CaputoNs,
];

pub fn sequence_gaps(
    spec: &KernelSpec,
    seq: &[GridFunction],
    limit: &GridFunction,
) -> Result<Vec<SequenceGap>> {
    let lim = GAP_OPS
        .iter()
        .map(|&op| run_op(op, spec, limit))
        .collect::<Result<Vec<_>>>()?;
    seq.par_iter()
        .enumerate()
        .map(|(k, fk)| {
            let mut g = [0.0; 4];
            for (i, &op) in GAP_OPS.iter().enumerate() {
                g[i] = sup_diff(run_op(op, spec, fk)?.values(), lim[i].values());
            }
            Ok(SequenceGap {
                k,
                data: sup_diff(fk.values(), limit.values()),
                aux1: g[0],
                aux2: g[1],
                rl: g[2],
                caputo: g[3],
            })
        })
        .collect()
}

/// Taylor partial sum `Σ_{j ≤ k} t^j / j!` with its derivative.
pub fn taylor_exp(k: usize) -> TestFunction {
    let sum = move |t: f64, upto: usize| {
        let (mut term, mut acc) = (1.0, 1.0);
        for j in 1..=upto {
            term *= t / j as f64;
            acc += term;
        }
        acc
    };
    TestFunction::new(
        format!("taylor{k}"),
        move |t| sum(t, k),
        move |t| if k == 0 { 0.0 } else { sum(t, k - 1) },
    )
}

/// Taylor partial sums of `e^t` against `e^t`: the bound
/// `‖₁I f_k - ₁I f‖ ≤ (ψ(b) - ψ(a)) ‖f_k - f‖` at every k, and all gaps small at
/// the end of the sequence.
pub fn check_limit_interchange(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let (a, b) = cfg.spec.interval();
    let span = cfg.spec.warp().psi(b) - cfg.spec.warp().psi(a);
    let seq = (0..=cfg.seq_len)
        .map(|k| taylor_exp(k).grid(a, b, cfg.grid_n))
        .collect::<Result<Vec<_>>>()?;
    let limit = GridFunction::with_deriv(a, b, cfg.grid_n, f64::exp, f64::exp)?;
    let gaps = sequence_gaps(&cfg.spec, &seq, &limit)?;
    let mut report = SuiteReport::new(Suite::LimitInterchange.name());
    let tol = cfg.tol.interchange;
    for g in &gaps {
        report.at_most(
            format!("aux1 k={}", g.k),
            g.aux1,
            span * g.data * (1.0 + tol) + tol,
        );
    }
    let last = gaps.last().expect("sequence is non-empty");
    report.at_most(
        format!("largest gap at k={}", last.k),
        last.largest(),
        cfg.tol.interchange_final,
    );
    let first = &gaps[0];
    report.notes.push(format!(
        "gaps k=0: aux1 {:.3e} aux2 {:.3e} rl {:.3e} caputo {:.3e}; k={}: aux1 {:.3e} aux2 {:.3e} rl {:.3e} caputo {:.3e}",
        first.aux1, first.aux2, first.rl, first.caputo, last.k, last.aux1, last.aux2, last.rl, last.caputo
    ));
    Ok(report)
}

/// The spec with constant order `alpha`, keeping γ and β (or their tie to α).
pub fn with_constant_order(spec: &KernelSpec, alpha: f64) -> Result<KernelSpec> {
    spec.with_order(OrderFunction::constant(alpha)?)
}

/// `max |H(t_i, t_j) - 1|` over all node pairs `t_j ≤ t_i`.
pub fn kernel_deviation(spec: &KernelSpec, n: usize) -> Result<f64> {
    let (a, b) = spec.interval();
    let t = GridFunction::from_values(a, b, vec![0.0; n + 1])?.nodes();
    let psi: Vec<f64> = t.iter().map(|&x| spec.warp().psi(x)).collect();
    let rows = (0..=n)
        .into_par_iter()
        .map(|i| {
            let row = spec.row(t[i])?;
            (0..=i).try_fold(0.0f64, |m, j| Ok(m.max((row.at_psi(psi[j])? - 1.0).abs())))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// Small-order limits (kernel → 1, Caputo-type → f(t) - f(a), RL-type → f(t))
/// are asserted; the order-one trend toward f' is reported.
pub fn check_axiom_limits(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut report = SuiteReport::new(Suite::AxiomLimits.name());
    let (a, b) = cfg.spec.interval();
    let n = cfg.grid_n;
    for &eps in &cfg.epsilons {
        let eps = eps.max(MIN_EPSILON);
        let small = with_constant_order(&cfg.spec, eps)?;
        let dev = kernel_deviation(&small, n)?;
        report.at_most(
            format!("kernel alpha={eps:e}"),
            dev,
            cfg.tol.kernel_slope * eps,
        );
        let rows = cfg
            .functions
            .par_iter()
            .map(|tf| {
                let g = cfg.grid(tf, n)?;
                let fa = g.values()[0];
                let caputo = run_op(Operator::CaputoNs, &small, &g)?;
                let rl = run_op(Operator::RlNs, &small, &g)?;
                let shifted: Vec<f64> = g.values().iter().map(|v| v - fa).collect();
                Ok([
                    (
                        format!("caputo alpha={eps:e} {}", tf.name()),
                        sup_diff(caputo.values(), &shifted),
                    ),
                    (
                        format!("rl alpha={eps:e} {}", tf.name()),
                        sup_diff(rl.values(), g.values()),
                    ),
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        for (case, d) in rows.into_iter().flatten() {
            report.at_most(case, d, cfg.tol.axiom);
        }
    }

    let mut eps_desc: Vec<f64> = cfg.near_one.iter().map(|e| e.max(MIN_EPSILON)).collect();
    eps_desc.sort_by(|x, y| y.total_cmp(x));
    for tf in &cfg.functions {
        let g = cfg.grid(tf, n)?;
        let df: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&t| tf.deriv(t) / cfg.spec.warp().dpsi(t))
            .collect();
        let mut trend = Vec::new();
        for &eps in &eps_desc {
            let near_one = with_constant_order(&cfg.spec, 1.0 - eps)?;
            let mut dists = [0.0; 2];
            for (k, op) in DERIVATIVES.iter().enumerate() {
                // compare away from t = a, where the Caputo-type value starts at 0
                let v = run_op(*op, &near_one, &g)?;
                let start = (0..=n).find(|&i| g.t(i) >= a + 0.1 * (b - a)).unwrap_or(0);
                dists[k] = sup_diff(&v.values()[start..], &df[start..]);
            }
            trend.push((eps, dists));
        }
        let decreasing = trend
            .windows(2)
            .all(|w| w[1].1[0] <= w[0].1[0] && w[1].1[1] <= w[0].1[1]);
        let detail: Vec<String> = trend
            .iter()
            .map(|(e, d)| format!("1-alpha={e:e}: rl {:.3e} caputo {:.3e}", d[0], d[1]))
            .collect();
        report.notes.push(format!(
            "{} toward f'/psi' on [a + (b-a)/10, b] ({}): {}",
            tf.name(),
            if decreasing {
                "decreasing"
            } else {
                "not monotone"
            },
            detail.join(", ")
        ));
    }
    Ok(report)
}

/// The spec with β replaced by γ.
fn collapse_beta(spec: &KernelSpec) -> Result<KernelSpec> {
    match spec.orders() {
        KernelOrders::Tied => Ok(spec.clone()),
        KernelOrders::Fixed { gamma, .. } => {
            let (a, b) = spec.interval();
            KernelSpec::new(
                gamma,
                gamma,
                spec.order().clone(),
                spec.warp().clone(),
                spec.norm().clone(),
                a,
                b,
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxPoint {
    pub node: usize,
    pub t0: f64,
    /// Caputo-type derivative at `t0`.
    pub value: f64,
    /// `M(α(t0))/(1-α(t0)) H(t0, a) (f(t0) - f(a))`.
    pub lower: f64,
}

/// The extremum inequality at the grid maximiser of `f`, with β = γ.
/// `NoInteriorMax` when the maximum is only attained at `a` and `f` is not
/// constant.
pub fn max_point(spec: &KernelSpec, f: &GridFunction) -> Result<MaxPoint> {
    let v = f.values();
    let node = (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best });
    if node == 0 && v.iter().any(|&x| x != v[0]) {
        return Err(FracError::NoInteriorMax);
    }
    let spec = collapse_beta(spec)?;
    let t0 = f.t(node);
    let value = run_op(Operator::CaputoNs, &spec, f)?.values()[node];
    let lower = spec.prefactor(t0)? * spec.eval(t0, f.a())? * (v[node] - v[0]);
    Ok(MaxPoint {
        node,
        t0,
        value,
        lower,
    })
}

pub fn check_max_point(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let results = cfg
        .functions
        .par_iter()
        .map(
            |tf| match max_point(&cfg.spec, &cfg.grid(tf, cfg.grid_n)?) {
                Err(FracError::NoInteriorMax) => Ok((tf.name().to_string(), None)),
                r => Ok((tf.name().to_string(), Some(r?))),
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let mut report = SuiteReport::new(Suite::MaxPoint.name());
    let tol = cfg.tol.max_point;
    let mut skipped = Vec::new();
    for (name, mp) in results {
        let Some(mp) = mp else {
            skipped.push(name);
            continue;
        };
        report.at_least(
            format!("{name} at t0={:.4}: value vs bound", mp.t0),
            mp.value,
            mp.lower - tol,
        );
        report.at_least(
            format!("{name} at t0={:.4}: value vs 0", mp.t0),
            mp.value,
            -tol,
        );
    }
    if !skipped.is_empty() {
        report.notes.push(format!(
            "maximum only at a, skipped: {}",
            skipped.join(", ")
        ));
    }
    Ok(report)
}

/// The Caputo-type derivative vanishes at `a`, and its first-node value over
/// `h` stays bounded under refinement.
pub fn check_vanish_at_a(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let (a, _) = cfg.spec.interval();
    let results = cfg
        .functions
        .par_iter()
        .map(|tf| {
            cfg.refinements
                .iter()
                .map(|&n| {
                    let g = cfg.grid(tf, n)?;
                    let d = run_op(Operator::CaputoNs, &cfg.spec, &g)?;
                    Ok((d.values()[0], d.values()[1] / g.h()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = SuiteReport::new(Suite::VanishAtA.name());
    let pre = cfg.spec.prefactor(a)?;
    for (tf, levels) in cfg.functions.iter().zip(results) {
        for (k, (at_a, _)) in levels.iter().enumerate() {
            report.at_most(
                format!("{} n={}: |value at a|", tf.name(), cfg.refinements[k]),
                at_a.abs(),
                0.0,
            );
        }
        let ratios: Vec<f64> = levels.iter().map(|(_, r)| r.abs()).collect();
        // |D f(t1)| ≤ P h sup|f'| near a, with H ≤ 1
        let slope = (0..=8)
            .map(|i| {
                tf.deriv(a + i as f64 * 1e-3 * (cfg.spec.interval().1 - a))
                    .abs()
            })
            .fold(0.0f64, f64::max);
        for (k, r) in ratios.iter().enumerate() {
            report.at_most(
                format!("{} n={}: first value / h", tf.name(), cfg.refinements[k]),
                *r,
                1.05 * pre * slope + 1e-9,
            );
        }
        // D f(t1) / h → P f'(a), with an O(h) gap
        let limit = pre * tf.deriv(a);
        let gaps: Vec<f64> = levels.iter().map(|(_, r)| (r - limit).abs()).collect();
        let grows = gaps
            .windows(2)
            .map(|w| w[1] - 1.05 * w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        report.at_most(
            format!("{}: distance to P f'(a) grows under refinement", tf.name()),
            grows,
            1e-9,
        );
    }
    Ok(report)
}
