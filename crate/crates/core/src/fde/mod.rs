//! The nonlinear equation `^C𝔇 u = f(t, u)` with the Caputo-type operator.
//!
//! The solution is marched node by node. On each panel `u` is taken linear in
//! `ψ`, so `u'/ψ'` is the panel slope and the operator at node `n` becomes
//!
//! ```text
//! P(t_n) Σ_j m_{n,j} (u_{j+1} - u_j) / (ψ_{j+1} - ψ_j),   m_{n,j} = ∫_panel H(t_n, τ) dψ(τ),
//! ```
//!
//! which is solved for `u_n` with a safeguarded Newton iteration.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::expr::{parse, Bindings, Var};
use crate::grid::GridFunction;
use crate::kernel::KernelSpec;
use crate::operators::{caputo_deriv_ns, panel_masses};

/// Per-node tolerance of the nonlinear solve.
pub const SOLVER_TOL: f64 = 1e-10;
pub const MAX_NEWTON: usize = 50;
pub const MIN_STEPS: usize = 16;
/// Slack for bound and comparison checks, scaled by `max(1, max|u|)`.
pub const BOUND_TOL: f64 = 1e-7;

const PROBE_SEED: u64 = 0x5eed_f00d;
const ENVELOPE_SAMPLES: usize = 9;

type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Right-hand side `f(t, u)` with an optional exact `∂f/∂u`.
#[derive(Clone)]
pub struct Rhs {
    f: Fn2,
    du: Option<Fn2>,
    label: String,
}

impl fmt::Debug for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Rhs")
            .field("label", &self.label)
            .field("has_du", &self.du.is_some())
            .finish()
    }
}

impl Rhs {
    pub fn new<F>(f: F, label: impl Into<String>) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Rhs {
            f: Arc::new(f),
            du: None,
            label: label.into(),
        }
    }

    pub fn with_du<D>(mut self, du: D) -> Self
    where
        D: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.du = Some(Arc::new(du));
        self
    }

    /// Parses `f` in `t` and `u`; `∂f/∂u` comes from the symbolic derivative.
    pub fn from_expr(source: &str) -> Result<Self> {
        let e = parse(source, &[Var::T, Var::U])?;
        let d = e.derivative(Var::U);
        let rhs = Rhs::new(
            move |t, u| e.eval(&Bindings::tu(t, u)).unwrap_or(f64::NAN),
            source,
        );
        Ok(rhs.with_du(move |t, u| d.eval(&Bindings::tu(t, u)).unwrap_or(f64::NAN)))
    }

    /// `λ u + h(t)` with `h` given on a grid.
    pub fn linear(lambda: f64, h: GridFunction) -> Self {
        let label = format!("{lambda} u + h(t)");
        Rhs::new(move |t, u| lambda * u + h.interpolate(t), label).with_du(move |_, _| lambda)
    }

    pub fn eval(&self, t: f64, u: f64) -> f64 {
        (self.f)(t, u)
    }

    pub fn du(&self, t: f64, u: f64) -> f64 {
        match &self.du {
            Some(d) => d(t, u),
            None => {
                let e = 1e-6 * (1.0 + u.abs());
                (self.eval(t, u + e) - self.eval(t, u - e)) / (2.0 * e)
            }
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// How the equation treats a right-hand side that does not vanish at `t = a`.
///
/// The operator is zero at `t = a`, so the literal equation can only hold there
/// if `f(a, u0) = 0`; otherwise its discrete solution jumps over the first
/// step. `Regularized` solves `^C𝔇 u = f(t, u) - H(t, a) f(a, u0)` instead,
/// which agrees with the literal equation whenever `f(a, u0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    #[default]
    Regularized,
    Literal,
}

#[derive(Debug, Clone)]
pub struct FdeProblem {
    spec: KernelSpec,
    rhs: Rhs,
    initial: f64,
    grid_n: usize,
    formulation: Formulation,
}

impl FdeProblem {
    pub fn new(spec: KernelSpec, rhs: Rhs, initial: f64, grid_n: usize) -> Result<Self> {
        if grid_n < MIN_STEPS {
            return Err(FracError::DegenerateGrid {
                n: grid_n,
                min: MIN_STEPS,
            });
        }
        if !initial.is_finite() {
            return Err(FracError::invalid(format!("initial value {initial}")));
        }
        let p = FdeProblem {
            spec,
            rhs,
            initial,
            grid_n,
            formulation: Formulation::default(),
        };
        let grid = p.zero_grid()?;
        for t in grid.nodes() {
            let v = p.rhs.eval(t, initial);
            if !v.is_finite() {
                return Err(FracError::DomainError(format!(
                    "rhs is not finite at t = {t}, u = {initial}"
                )));
            }
        }
        Ok(p)
    }

    pub fn with_formulation(mut self, formulation: Formulation) -> Self {
        self.formulation = formulation;
        self
    }

    pub fn with_rhs(mut self, rhs: Rhs, initial: f64) -> Self {
        self.rhs = rhs;
        self.initial = initial;
        self
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn rhs(&self) -> &Rhs {
        &self.rhs
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    fn zero_grid(&self) -> Result<GridFunction> {
        let (a, b) = self.spec.interval();
        GridFunction::from_values(a, b, vec![0.0; self.grid_n + 1])
    }
}

/// The comparison equation `v' : ^C𝔇 v = λ v + h(t)` of a sandwich bound.
#[derive(Debug, Clone, Serialize)]
pub struct LinearBound {
    lambda: f64,
    h: GridFunction,
    initial: Option<f64>,
}

impl LinearBound {
    pub fn new(lambda: f64, h: GridFunction) -> Result<Self> {
        if !(lambda < 0.0) {
            return Err(FracError::HypothesisViolation(format!(
                "bound slope lambda = {lambda} must be negative"
            )));
        }
        Ok(LinearBound {
            lambda,
            h,
            initial: None,
        })
    }

    /// Initial value of the bound; defaults to the problem's.
    pub fn with_initial(mut self, v0: f64) -> Self {
        self.initial = Some(v0);
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn h(&self) -> &GridFunction {
        &self.h
    }

    fn at(&self, i: usize, u: f64) -> f64 {
        self.lambda * u + self.h.values()[i]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub lower: GridFunction,
    pub upper: GridFunction,
    pub violations: usize,
    /// Whether `λ₂u + h₂ ≤ f(t,u) ≤ λ₁u + h₁` held at every sampled point.
    pub hypothesis_held: bool,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub solution: GridFunction,
    /// Iterations spent at nodes `1..=n`.
    pub newton_iters: Vec<usize>,
    /// Largest nodal residual of the discrete equation, recomputed from `u`.
    pub residual_norm: f64,
    /// `|f(a, u0)|`; nonzero values mean the literal equation is inconsistent at `a`.
    pub compatibility: f64,
    pub formulation: Formulation,
    pub bound_check: Option<BoundCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
enum MemoryOrder {
    #[default]
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, Default)]
struct SolveOptions {
    memory_order: MemoryOrder,
    /// Seed and relative size of a random offset to each initial Newton guess.
    jitter: Option<(u64, f64)>,
}

/// Warped nodes, prefactors and kernel masses `m_{n,j}`.
struct Discretization {
    t: Vec<f64>,
    psi: Vec<f64>,
    pre: Vec<f64>,
    h_at_a: Vec<f64>,
    masses: Vec<Vec<f64>>,
}

impl Discretization {
    fn new(spec: &KernelSpec, grid: &GridFunction) -> Result<Self> {
        let t = grid.nodes();
        let psi: Vec<f64> = t.iter().map(|&x| spec.warp().psi(x)).collect();
        for i in 0..psi.len() {
            let ok = psi[i].is_finite() && (i == 0 || psi[i] > psi[i - 1]);
            if !ok {
                return Err(FracError::DomainError(format!(
                    "warp is not finite and increasing near t = {}",
                    t[i]
                )));
            }
        }
        let pre = t
            .iter()
            .map(|&x| spec.prefactor(x))
            .collect::<Result<Vec<_>>>()?;
        let h_at_a = t
            .iter()
            .map(|&x| spec.eval(x, t[0]))
            .collect::<Result<Vec<_>>>()?;
        let masses = (0..t.len())
            .into_par_iter()
            .map(|i| {
                if i == 0 {
                    Ok(Vec::new())
                } else {
                    panel_masses(spec, &psi, t[i], i)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Discretization {
            t,
            psi,
            pre,
            h_at_a,
            masses,
        })
    }

    fn slope(&self, u: &[f64], j: usize) -> f64 {
        (u[j + 1] - u[j]) / (self.psi[j + 1] - self.psi[j])
    }

    /// `Σ_{j < n-1} m_{n,j} s_j` and the sum of magnitudes of its terms.
    fn memory(&self, u: &[f64], n: usize, order: MemoryOrder) -> (f64, f64) {
        let term = |j: usize| self.masses[n][j] * self.slope(u, j);
        let (mut acc, mut mag) = (0.0, 0.0);
        let mut add = |j: usize| {
            let v = term(j);
            acc += v;
            mag += v.abs();
        };
        match order {
            MemoryOrder::Forward => (0..n - 1).for_each(&mut add),
            MemoryOrder::Reverse => (0..n - 1).rev().for_each(&mut add),
        }
        (acc, mag)
    }
}

fn forcing_shift(problem: &FdeProblem, disc: &Discretization, n: usize) -> f64 {
    match problem.formulation {
        Formulation::Literal => 0.0,
        Formulation::Regularized => disc.h_at_a[n] * problem.rhs.eval(disc.t[0], problem.initial),
    }
}

/// Solves the problem on `grid_n` uniform steps.
pub fn solve_fde(problem: &FdeProblem) -> Result<SolveReport> {
    solve_with(problem, SolveOptions::default())
}

fn solve_with(problem: &FdeProblem, opts: SolveOptions) -> Result<SolveReport> {
    let grid = problem.zero_grid()?;
    let disc = Discretization::new(&problem.spec, &grid)?;
    let rhs = &problem.rhs;
    let n_steps = problem.grid_n;
    let mut rng = opts.jitter.map(|(seed, _)| ChaCha8Rng::seed_from_u64(seed));
    let mut u = vec![0.0; n_steps + 1];
    u[0] = problem.initial;
    let mut iters = Vec::with_capacity(n_steps);
    for n in 1..=n_steps {
        let (mem, _) = disc.memory(&u, n, opts.memory_order);
        let dpsi = disc.psi[n] - disc.psi[n - 1];
        let last = disc.masses[n][n - 1] / dpsi;
        let pre = disc.pre[n];
        let tn = disc.t[n];
        let shift = forcing_shift(problem, &disc, n);
        let prev = u[n - 1];
        let g = |x: f64| pre * (mem + last * (x - prev)) - rhs.eval(tn, x) + shift;
        let dg = |x: f64| pre * last - rhs.du(tn, x);
        let mut guess = prev;
        if let (Some(rng), Some((_, size))) = (rng.as_mut(), opts.jitter) {
            guess += size * (1.0 + prev.abs()) * rng.random_range(-1.0..1.0);
        }
        let (x, k) = newton(&g, &dg, guess)
            .or_else(|| bisect(&g, prev))
            .ok_or(FracError::NewtonDivergence { node: n, t: tn })?;
        u[n] = x;
        iters.push(k);
    }
    let solution = GridFunction::from_values(grid.a(), grid.b(), u)?;
    let residual_norm = certify(problem, &disc, &solution)?;
    Ok(SolveReport {
        solution,
        newton_iters: iters,
        residual_norm,
        compatibility: rhs.eval(disc.t[0], problem.initial).abs(),
        formulation: problem.formulation,
        bound_check: None,
    })
}

fn converged(step: f64, x: f64) -> bool {
    step.abs() <= SOLVER_TOL * (1.0 + x.abs())
}

/// Damped Newton; `None` when it fails to converge in `MAX_NEWTON` steps.
fn newton(g: &dyn Fn(f64) -> f64, dg: &dyn Fn(f64) -> f64, x0: f64) -> Option<(f64, usize)> {
    let mut x = x0;
    let mut gx = g(x);
    for k in 1..=MAX_NEWTON {
        let d = dg(x);
        if !(gx.is_finite() && d.is_finite()) || d == 0.0 {
            return None;
        }
        let step = gx / d;
        let mut lambda = 1.0;
        let (mut xn, mut gn) = (x - step, g(x - step));
        while !(gn.is_finite() && gn.abs() <= gx.abs()) && lambda > 1e-6 {
            lambda *= 0.5;
            xn = x - lambda * step;
            gn = g(xn);
        }
        if !gn.is_finite() {
            return None;
        }
        x = xn;
        gx = gn;
        if converged(lambda * step, x) || gx == 0.0 {
            return Some((x, k));
        }
    }
    None
}

/// Bisection on a bracket grown geometrically around `center`.
fn bisect(g: &dyn Fn(f64) -> f64, center: f64) -> Option<(f64, usize)> {
    let mut r = 1.0 + center.abs();
    let mut bracket = None;
    for _ in 0..64 {
        let (lo, hi) = (center - r, center + r);
        let (glo, ghi) = (g(lo), g(hi));
        if glo.is_finite() && ghi.is_finite() && glo * ghi <= 0.0 {
            bracket = Some((lo, hi, glo));
            break;
        }
        r *= 2.0;
    }
    let (mut lo, mut hi, mut glo) = bracket?;
    for k in 1..=400 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if !gm.is_finite() {
            return None;
        }
        if (gm <= 0.0) == (glo <= 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        if converged(hi - lo, mid) {
            return Some((0.5 * (lo + hi), MAX_NEWTON + k));
        }
    }
    None
}

/// The discrete Caputo-type operator used by the solver, applied to `u`.
pub fn discrete_caputo(spec: &KernelSpec, u: &GridFunction) -> Result<Vec<f64>> {
    let (a, b) = spec.interval();
    if u.a() != a || u.b() != b {
        return Err(FracError::invalid(format!(
            "grid [{}, {}] does not match kernel interval [{a}, {b}]",
            u.a(),
            u.b()
        )));
    }
    let disc = Discretization::new(spec, u)?;
    Ok(discrete_caputo_with(&disc, u.values())
        .into_iter()
        .map(|(v, _)| v)
        .collect())
}

fn discrete_caputo_with(disc: &Discretization, u: &[f64]) -> Vec<(f64, f64)> {
    (0..u.len())
        .map(|n| {
            if n == 0 {
                return (0.0, 0.0);
            }
            let (mem, mag) = disc.memory(u, n, MemoryOrder::Forward);
            let last = disc.masses[n][n - 1] * disc.slope(u, n - 1);
            (disc.pre[n] * (mem + last), disc.pre[n] * (mag + last.abs()))
        })
        .collect()
}

/// Recomputes the discrete equation from `u` and returns the largest residual.
fn certify(problem: &FdeProblem, disc: &Discretization, u: &GridFunction) -> Result<f64> {
    let values = u.values();
    let mut worst = 0.0f64;
    for (n, (d, mag)) in discrete_caputo_with(disc, values)
        .into_iter()
        .enumerate()
        .skip(1)
    {
        let f = problem.rhs.eval(disc.t[n], values[n]);
        let r = (d - f + forcing_shift(problem, disc, n)).abs();
        let scale = 1.0 + f.abs() + mag;
        if !(r <= 10.0 * SOLVER_TOL * scale) {
            return Err(FracError::NonConvergent(format!(
                "residual {r:e} at node {n} exceeds the certification threshold"
            )));
        }
        worst = worst.max(r);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum ComparisonOutcome {
    /// `Q ≤ tol` everywhere and `u ≤ tol` everywhere.
    Pass,
    /// `Q > tol` at `node`, so the premise does not hold.
    NotApplicable { node: usize, t: f64, q_value: f64 },
    /// The premise holds but `u(t) > tol`.
    Violation { node: usize, t: f64, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub outcome: ComparisonOutcome,
    /// `max_t (^C𝔇 u + q u)`.
    pub max_q: f64,
    pub max_u: f64,
    pub tol: f64,
}

/// Checks `^C𝔇 u + q u ≤ 0 ⇒ u ≤ 0` on the grid of `u`.
pub fn check_comparison(
    spec: &KernelSpec,
    u: &GridFunction,
    q: &GridFunction,
) -> Result<ComparisonReport> {
    if !u.same_grid(q) {
        return Err(FracError::invalid("u and q live on different grids"));
    }
    let qv = q.values();
    if let Some(i) = qv.iter().position(|&x| !(x >= 0.0)) {
        return Err(FracError::HypothesisViolation(format!(
            "q({}) = {} is negative",
            q.t(i),
            qv[i]
        )));
    }
    if qv[0] == 0.0 {
        return Err(FracError::HypothesisViolation("q(a) = 0".into()));
    }
    let d = caputo_deriv_ns(spec, u)?.values;
    let uv = u.values();
    let big_q: Vec<f64> = (0..uv.len())
        .map(|i| d.values()[i] + qv[i] * uv[i])
        .collect();
    let tol = BOUND_TOL * u.max_abs().max(1.0);
    let max_q = big_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_u = uv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let outcome = if let Some(i) = big_q.iter().position(|&x| x > tol) {
        ComparisonOutcome::NotApplicable {
            node: i,
            t: u.t(i),
            q_value: big_q[i],
        }
    } else if let Some(i) = uv.iter().position(|&x| x > tol) {
        ComparisonOutcome::Violation {
            node: i,
            t: u.t(i),
            value: uv[i],
        }
    } else {
        ComparisonOutcome::Pass
    };
    Ok(ComparisonReport {
        outcome,
        max_q,
        max_u,
        tol,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ComparisonTrials {
    pub cases: usize,
    pub passes: usize,
    pub not_applicable: usize,
    pub violations: Vec<(usize, ComparisonOutcome)>,
}

/// Random pairs `(u, q)` satisfying the premise by construction: `u` solves
/// `^C𝔇 u = -q u + r` with `r ≤ -δ < 0` and `u(a) = r(a)/q(a)`, so that
/// `^C𝔇 u + q u = r`.
pub fn comparison_trials(
    spec: &KernelSpec,
    grid_n: usize,
    cases: usize,
    seed: u64,
) -> Result<ComparisonTrials> {
    let (a, _) = spec.interval();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<[f64; 8]> = (0..cases)
        .map(|_| {
            [
                rng.random_range(0.1..2.0),
                rng.random_range(0.0..2.0),
                rng.random_range(0.5..4.0),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.05..0.5),
                rng.random_range(0.0..2.0),
                rng.random_range(0.5..4.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect();
    let outcomes = params
        .par_iter()
        .map(|&[q0, q1, w1, p1, delta, r1, w2, p2]| {
            let q = move |t: f64| q0 + q1 * (w1 * t + p1).sin().powi(2);
            let r = move |t: f64| -delta - 0.5 * r1 * (1.0 + (w2 * t + p2).sin());
            let rhs = Rhs::new(move |t, u| -q(t) * u + r(t), "-q u + r").with_du(move |t, _| -q(t));
            let problem = FdeProblem::new(spec.clone(), rhs, r(a) / q(a), grid_n)?;
            let u = solve_fde(&problem)?.solution;
            let qg = GridFunction::from_fn(u.a(), u.b(), grid_n, q)?;
            Ok(check_comparison(spec, &u, &qg)?.outcome)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = ComparisonTrials {
        cases,
        ..Default::default()
    };
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            ComparisonOutcome::Pass => out.passes += 1,
            ComparisonOutcome::NotApplicable { .. } => out.not_applicable += 1,
            ComparisonOutcome::Violation { .. } => out.violations.push((i, o)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub runs: usize,
    /// Largest sup-norm distance between any two solutions.
    pub max_divergence: f64,
    pub max_sampled_du: f64,
}

/// Samples of `u` spanning `[min, max]` of the given solutions, widened by 10%.
fn envelope(sols: &[&GridFunction]) -> Vec<f64> {
    let lo = sols
        .iter()
        .flat_map(|s| s.values())
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = sols
        .iter()
        .flat_map(|s| s.values())
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.1 * (hi - lo) + 1e-3 * (1.0 + lo.abs().max(hi.abs()));
    let (lo, hi) = (lo - pad, hi + pad);
    (0..ENVELOPE_SAMPLES)
        .map(|k| lo + (hi - lo) * k as f64 / (ENVELOPE_SAMPLES - 1) as f64)
        .collect()
}

/// Re-solves the problem from randomized Newton guesses, alternating the
/// summation order of the memory term, and measures how far the solutions
/// spread.
pub fn uniqueness_probe(problem: &FdeProblem, perturbations: usize) -> Result<UniquenessReport> {
    let base = solve_fde(problem)?;
    let grid = &base.solution;
    let mut max_du = f64::NEG_INFINITY;
    for u in envelope(&[grid]) {
        for i in 0..=grid.n() {
            let d = problem.rhs.du(grid.t(i), u);
            max_du = max_du.max(d);
            if !(d <= 1e-12) {
                return Err(FracError::HypothesisViolation(format!(
                    "df/du = {d} > 0 at t = {}, u = {u}",
                    grid.t(i)
                )));
            }
        }
    }
    let runs = (0..perturbations)
        .into_par_iter()
        .map(|k| {
            let opts = SolveOptions {
                memory_order: if k % 2 == 0 {
                    MemoryOrder::Reverse
                } else {
                    MemoryOrder::Forward
                },
                jitter: Some((PROBE_SEED.wrapping_add(k as u64), 0.5)),
            };
            Ok(solve_with(problem, opts)?.solution)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all = vec![base.solution];
    all.extend(runs);
    let mut max_divergence = 0.0f64;
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let d = all[i]
                .values()
                .iter()
                .zip(all[j].values())
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            max_divergence = max_divergence.max(d);
        }
    }
    Ok(UniquenessReport {
        runs: all.len(),
        max_divergence,
        max_sampled_du: max_du,
    })
}

/// Solves the problem and the two linear comparison equations
/// `^C𝔇 v₁ = λ₁ v₁ + h₁`, `^C𝔇 v₂ = λ₂ v₂ + h₂` in the literal formulation and
/// counts nodes where `v₂ - tol ≤ u ≤ v₁ + tol` fails.
pub fn sandwich_bounds(
    problem: &FdeProblem,
    lower: &LinearBound,
    upper: &LinearBound,
) -> Result<SolveReport> {
    let grid = problem.zero_grid()?;
    for (name, b) in [("lower", lower), ("upper", upper)] {
        if !grid.same_grid(&b.h) {
            return Err(FracError::invalid(format!(
                "{name} bound h is not on the problem grid"
            )));
        }
    }
    let literal = problem.clone().with_formulation(Formulation::Literal);
    let bound_problem = |b: &LinearBound| {
        let v0 = b.initial.unwrap_or(problem.initial);
        literal
            .clone()
            .with_rhs(Rhs::linear(b.lambda, b.h.clone()), v0)
    };
    let (p1, p2) = (bound_problem(upper), bound_problem(lower));
    let (ru, (r1, r2)) = rayon::join(
        || solve_fde(&literal),
        || rayon::join(|| solve_fde(&p1), || solve_fde(&p2)),
    );
    let (mut report, v1, v2) = (ru?, r1?.solution, r2?.solution);
    let u = &report.solution;

    let mut hypothesis_held =
        v2.values()[0] <= problem.initial && problem.initial <= v1.values()[0];
    let samples = envelope(&[u, &v1, &v2]);
    for i in 0..=grid.n() {
        let t = grid.t(i);
        for &x in &samples {
            let f = problem.rhs.eval(t, x);
            let slack = 1e-12 * (1.0 + f.abs());
            if f < lower.at(i, x) - slack || f > upper.at(i, x) + slack {
                hypothesis_held = false;
            }
        }
    }

    let tol = BOUND_TOL * u.max_abs().max(1.0);
    let violations = (0..=grid.n())
        .filter(|&i| {
            let x = u.values()[i];
            x < v2.values()[i] - tol || x > v1.values()[i] + tol
        })
        .count();
    report.bound_check = Some(BoundCheck {
        lower: v2,
        upper: v1,
        violations,
        hypothesis_held,
        tol,
    });
    Ok(report)
}

/// [`sandwich_bounds`], failing with `BoundViolation` at the first node where
/// the enclosure does not hold.
pub fn sandwich_check(
    problem: &FdeProblem,
    lower: &LinearBound,
    upper: &LinearBound,
) -> Result<SolveReport> {
    let report = sandwich_bounds(problem, lower, upper)?;
    let bc = report.bound_check.as_ref().expect("bounds were computed");
    if bc.violations > 0 {
        let u = &report.solution;
        let (lo, hi) = (bc.lower.values(), bc.upper.values());
        let node = (0..=u.n())
            .find(|&i| u.values()[i] < lo[i] - bc.tol || u.values()[i] > hi[i] + bc.tol)
            .expect("violations were counted");
        return Err(FracError::BoundViolation {
            node,
            t: u.t(node),
            lower: lo[node],
            value: u.values()[node],
            upper: hi[node],
            hypothesis_held: bc.hypothesis_held,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests;
