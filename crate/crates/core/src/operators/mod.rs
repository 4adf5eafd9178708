//! Discrete fractional operators on uniform grids.
//!
//! All integrals are computed in `u = ψ(τ)`, where the warp disappears from
//! the measure: `ψ'(τ) dτ = du`. Data are taken piecewise linear in `u`.
//!
//! * Non-singular kernels (`₁I`, `₂I` and the derivatives built on them) use a
//!   product trapezoid rule: on each panel the kernel is interpolated
//!   linearly in `w = (ψ(t) - u)^γ`, in which it is smooth, and the product
//!   with the linear data is integrated exactly.
//! * Power kernels (`(ψ(t) - u)^{-α}` and `^{α-1}`) are integrated exactly
//!   against the linear data.
//! * Outer `d/dt` uses second-order differences of the inner integral.

pub mod direct;
mod weights;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::grid::{differentiate, GridFunction};
use crate::kernel::{
    prefactor_for, KernelOrders, KernelRow, KernelSpec, NormalizationFunction, OrderFunction,
    WarpFunction,
};
use crate::special::recip_gamma;

use weights::power_weights;
pub(crate) use weights::warped_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ProductTrapezoid,
    ProductMidpoint,
}

/// Where the order in the exponent of the classical integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExponentAt {
    /// `(ψ(t) - ψ(τ))^{α(t) - 1}`.
    #[default]
    T,
    /// `(ψ(t) - ψ(τ))^{α(τ) - 1}`, with α taken at each panel midpoint.
    Tau,
}

/// Discretisation of the classical Caputo derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CaputoForm {
    /// `∫ (ψ(t) - ψ(τ))^{-α} f'(τ) dτ` with `f'` linear in ψ.
    #[default]
    AsPrinted,
    /// `∫ ψ'(τ) (ψ(t) - ψ(τ))^{-α} (f'(τ)/ψ'(τ)) dτ` with `f'/ψ'` taken as the
    /// divided difference of `f` on each panel.
    StandardPsi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct OperatorOptions {
    pub scheme: Scheme,
    pub exponent_at: ExponentAt,
    pub caputo_form: CaputoForm,
    /// Estimate the discretisation error by comparison with the grid of
    /// spacing 2h.
    pub estimate_error: bool,
    /// Fail with `QuadratureFailure` when the estimate exceeds this value.
    /// Implies `estimate_error`.
    pub error_budget: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    RlIntegral,
    RlClassical,
    CaputoClassical,
    Aux1,
    Aux2,
    RlNs,
    CaputoNs,
}

impl Operator {
    pub const ALL: [Operator; 7] = [
        Operator::RlIntegral,
        Operator::RlClassical,
        Operator::CaputoClassical,
        Operator::Aux1,
        Operator::Aux2,
        Operator::RlNs,
        Operator::CaputoNs,
    ];

    fn min_grid(self) -> usize {
        match self {
            Operator::RlClassical => 16,
            _ => crate::grid::MIN_SUBINTERVALS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorResult {
    pub values: GridFunction,
    /// Largest per-node estimate; zero when no estimate was requested.
    pub quad_error_estimate: f64,
    pub node_errors: Option<Vec<f64>>,
    pub scheme: Scheme,
}

/// Per-node data shared by every operator.
struct Nodes {
    t: Vec<f64>,
    psi: Vec<f64>,
    dpsi: Vec<f64>,
    alpha: Vec<f64>,
    h: f64,
}

impl Nodes {
    fn new(spec: &KernelSpec, f: &GridFunction) -> Result<Self> {
        let (a, b) = spec.interval();
        let tol = 1e-12 * (b - a);
        if (f.a() - a).abs() > tol || (f.b() - b).abs() > tol {
            return Err(FracError::invalid(format!(
                "grid [{}, {}] does not match kernel interval [{a}, {b}]",
                f.a(),
                f.b()
            )));
        }
        let t = f.nodes();
        let warp = spec.warp();
        let psi: Vec<f64> = t.iter().map(|&x| warp.psi(x)).collect();
        let dpsi: Vec<f64> = t.iter().map(|&x| warp.dpsi(x)).collect();
        let alpha: Vec<f64> = t.iter().map(|&x| spec.order().eval(x)).collect();
        for i in 0..t.len() {
            if !(psi[i].is_finite() && dpsi[i] > 0.0 && dpsi[i].is_finite()) {
                return Err(FracError::DomainError(format!(
                    "warp invalid at t = {}: psi = {}, psi' = {}",
                    t[i], psi[i], dpsi[i]
                )));
            }
            if i > 0 && psi[i] <= psi[i - 1] {
                return Err(FracError::DomainError(format!(
                    "warp is not increasing near t = {}",
                    t[i]
                )));
            }
            if !(alpha[i] > 0.0 && alpha[i] <= 1.0) {
                return Err(FracError::DomainError(format!(
                    "alpha({}) = {} outside (0, 1]",
                    t[i], alpha[i]
                )));
            }
        }
        Ok(Nodes {
            t,
            psi,
            dpsi,
            alpha,
            h: f.h(),
        })
    }

    fn n(&self) -> usize {
        self.t.len() - 1
    }
}

fn par_nodes<F>(n: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    (0..=n).into_par_iter().map(f).collect()
}

// Near the diagonal H is not smooth in u when γ < 1 (it behaves like
// 1 - c s^γ), and linear interpolation in s^γ loses accuracy for γ < 1/2.
// Panels with s below NEAR_FRACTION of the warped interval length, and with
// c s^γ ≤ 1, are integrated term by term through the power series of E_β.
const NEAR_FRACTION: f64 = 0.05;

struct NearSeries {
    coef: Vec<f64>,
    gamma: f64,
    reach: f64,
}

impl NearSeries {
    fn new(row: &KernelRow, span: f64) -> Option<Self> {
        let gamma = row.gamma();
        if gamma == 1.0 {
            return None;
        }
        let c = row.scale();
        let beta = row.beta();
        let reach = (NEAR_FRACTION * span).min(c.powf(-1.0 / gamma));
        // coefficients in the scaled variable s / reach, where c s^γ ≤ x ≤ 1
        let x = c * reach.powf(gamma);
        let mut coef = Vec::new();
        let mut xk = 1.0;
        for k in 0..2000 {
            let a = xk * recip_gamma(beta * k as f64 + 1.0);
            coef.push(a);
            if k > 0 && a.abs() < 1e-17 {
                break;
            }
            xk *= -x;
        }
        Some(NearSeries { coef, gamma, reach })
    }

    fn panel(&self, big: f64, small: f64, g0: f64, g1: f64) -> f64 {
        let (big, small) = (big / self.reach, small / self.reach);
        let mut acc = 0.0;
        for (k, a) in self.coef.iter().enumerate() {
            let (w0, w1) = power_weights(self.gamma * k as f64, big, small);
            acc += a * (g0 * w0 + g1 * w1);
        }
        acc * self.reach
    }
}

/// `∫_a^{t_i} H(t_i, τ) g dψ(τ)` at every node, `g` given at the nodes.
fn kernel_integral(spec: &KernelSpec, nd: &Nodes, g: &[f64], scheme: Scheme) -> Result<Vec<f64>> {
    par_nodes(nd.n(), |i| {
        if i == 0 {
            return Ok(0.0);
        }
        let row = spec.row(nd.t[i])?;
        let gamma = row.gamma();
        let p = nd.psi[i];
        let mut acc = 0.0;
        match scheme {
            Scheme::ProductTrapezoid => {
                let near = NearSeries::new(&row, nd.psi[nd.n()] - nd.psi[0]);
                let mut h0 = row.at_gap(p - nd.psi[0])?;
                for j in 0..i {
                    let big = p - nd.psi[j];
                    let small = if j + 1 == i { 0.0 } else { p - nd.psi[j + 1] };
                    let h1 = if j + 1 == i { 1.0 } else { row.at_gap(small)? };
                    if let Some(near) = near.as_ref().filter(|s| big <= s.reach) {
                        acc += near.panel(big, small, g[j], g[j + 1]);
                        h0 = h1;
                        continue;
                    }
                    let d = big - small;
                    let (w, wl) = warped_weights(gamma, big, small);
                    let (g0, dg, dh) = (g[j], g[j + 1] - g[j], h1 - h0);
                    acc += d * h0 * g0 + 0.5 * d * h0 * dg + dh * g0 * w + dh * dg * wl;
                    h0 = h1;
                }
            }
            Scheme::ProductMidpoint => {
                for j in 0..i {
                    let big = p - nd.psi[j];
                    let small = if j + 1 == i { 0.0 } else { p - nd.psi[j + 1] };
                    let d = big - small;
                    acc += d * row.at_gap(0.5 * (big + small))? * 0.5 * (g[j] + g[j + 1]);
                }
            }
        }
        Ok(acc)
    })
}

/// `∫ H(t, τ) dψ(τ)` over each panel `[ψ_j, ψ_{j+1}]` left of `ψ_i`, where
/// `t` is the node with warped value `psi[i]`.
pub(crate) fn panel_masses(spec: &KernelSpec, psi: &[f64], t: f64, i: usize) -> Result<Vec<f64>> {
    let row = spec.row(t)?;
    let near = NearSeries::new(&row, psi[psi.len() - 1] - psi[0]);
    let p = psi[i];
    let mut out = Vec::with_capacity(i);
    let mut h0 = row.at_gap(p - psi[0])?;
    for j in 0..i {
        let big = p - psi[j];
        let small = if j + 1 == i { 0.0 } else { p - psi[j + 1] };
        let h1 = if j + 1 == i { 1.0 } else { row.at_gap(small)? };
        let mass = match near.as_ref().filter(|s| big <= s.reach) {
            Some(near) => near.panel(big, small, 1.0, 1.0),
            None => {
                let (w, _) = warped_weights(row.gamma(), big, small);
                (big - small) * h0 + (h1 - h0) * w
            }
        };
        out.push(mass);
        h0 = h1;
    }
    Ok(out)
}

/// `∫_a^{t_i} (ψ(t_i) - u)^{e_j} g du` with the exponent from `exponent(i, j)`.
fn power_integral<E>(nd: &Nodes, g: &[f64], exponent: E) -> Result<Vec<f64>>
where
    E: Fn(usize, usize) -> f64 + Sync + Send,
{
    par_nodes(nd.n(), |i| {
        let p = nd.psi[i];
        let mut acc = 0.0;
        for j in 0..i {
            let big = p - nd.psi[j];
            let small = if j + 1 == i { 0.0 } else { p - nd.psi[j + 1] };
            let (w0, w1) = power_weights(exponent(i, j), big, small);
            acc += g[j] * w0 + g[j + 1] * w1;
        }
        Ok(acc)
    })
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(FracError::NonConvergent(format!(
            "{what} produced a non-finite value at node {i}"
        ))),
    }
}

fn compute(
    op: Operator,
    spec: &KernelSpec,
    f: &GridFunction,
    opts: &OperatorOptions,
) -> Result<Vec<f64>> {
    let n = f.n();
    if n < op.min_grid() {
        return Err(FracError::DegenerateGrid {
            n,
            min: op.min_grid(),
        });
    }
    let nd = Nodes::new(spec, f)?;
    let fv = f.values();
    let singular_alpha = |i: usize| -> Result<()> {
        if nd.alpha[i] >= 1.0 {
            Err(FracError::SingularOrder {
                t: nd.t[i],
                alpha: nd.alpha[i],
            })
        } else {
            Ok(())
        }
    };
    let out = match op {
        Operator::RlIntegral => {
            let inner = match opts.exponent_at {
                ExponentAt::T => power_integral(&nd, fv, |i, _| nd.alpha[i] - 1.0)?,
                ExponentAt::Tau => {
                    let order = spec.order();
                    let mids: Vec<f64> = (0..n)
                        .map(|j| order.eval(0.5 * (nd.t[j] + nd.t[j + 1])))
                        .collect();
                    if let Some(j) = mids.iter().position(|m| !(*m > 0.0 && *m <= 1.0)) {
                        return Err(FracError::DomainError(format!(
                            "alpha = {} outside (0, 1] inside panel {j}",
                            mids[j]
                        )));
                    }
                    power_integral(&nd, fv, |_, j| mids[j] - 1.0)?
                }
            };
            inner
                .iter()
                .zip(&nd.alpha)
                .map(|(v, a)| v * recip_gamma(*a))
                .collect()
        }
        Operator::RlClassical => {
            (0..=n).try_for_each(singular_alpha)?;
            let inner = power_integral(&nd, fv, |i, _| -nd.alpha[i])?;
            let d = differentiate(&inner, nd.h);
            (0..=n)
                .map(|i| recip_gamma(1.0 - nd.alpha[i]) * d[i] / nd.dpsi[i])
                .collect()
        }
        Operator::CaputoClassical => {
            (0..=n).try_for_each(singular_alpha)?;
            let inner = match opts.caputo_form {
                CaputoForm::AsPrinted => {
                    let df = f.deriv_values();
                    let g: Vec<f64> = (0..=n).map(|i| df[i] / nd.dpsi[i]).collect();
                    power_integral(&nd, &g, |i, _| -nd.alpha[i])?
                }
                CaputoForm::StandardPsi => par_nodes(n, |i| {
                    let p = nd.psi[i];
                    let mut acc = 0.0;
                    for j in 0..i {
                        let big = p - nd.psi[j];
                        let small = if j + 1 == i { 0.0 } else { p - nd.psi[j + 1] };
                        let slope = (fv[j + 1] - fv[j]) / (nd.psi[j + 1] - nd.psi[j]);
                        let (w0, w1) = power_weights(-nd.alpha[i], big, small);
                        acc += slope * (w0 + w1);
                    }
                    Ok(acc)
                })?,
            };
            (0..=n)
                .map(|i| recip_gamma(1.0 - nd.alpha[i]) * inner[i])
                .collect()
        }
        Operator::Aux1 => kernel_integral(spec, &nd, fv, opts.scheme)?,
        Operator::Aux2 => {
            let df = f.deriv_values();
            let g: Vec<f64> = (0..=n).map(|i| df[i] / nd.dpsi[i]).collect();
            kernel_integral(spec, &nd, &g, opts.scheme)?
        }
        Operator::RlNs => {
            let pre = prefactors(spec, &nd)?;
            let inner = kernel_integral(spec, &nd, fv, opts.scheme)?;
            let d = differentiate(&inner, nd.h);
            (0..=n).map(|i| pre[i] * d[i] / nd.dpsi[i]).collect()
        }
        Operator::CaputoNs => {
            let pre = prefactors(spec, &nd)?;
            let df = f.deriv_values();
            let g: Vec<f64> = (0..=n).map(|i| df[i] / nd.dpsi[i]).collect();
            let inner = kernel_integral(spec, &nd, &g, opts.scheme)?;
            (0..=n).map(|i| pre[i] * inner[i]).collect()
        }
    };
    check_finite(&out, &format!("{op:?}"))?;
    Ok(out)
}

fn prefactors(spec: &KernelSpec, nd: &Nodes) -> Result<Vec<f64>> {
    (0..=nd.n())
        .map(|i| prefactor_for(spec.norm(), nd.alpha[i], nd.t[i]))
        .collect()
}

/// Applies `op` with the given options.
pub fn apply(
    op: Operator,
    spec: &KernelSpec,
    f: &GridFunction,
    opts: &OperatorOptions,
) -> Result<OperatorResult> {
    let values = compute(op, spec, f, opts)?;
    let want_estimate = opts.estimate_error || opts.error_budget.is_some();
    let (estimate, node_errors) = if want_estimate {
        let errs = richardson(op, spec, f, opts, &values)?;
        (errs.iter().fold(0.0f64, |m, e| m.max(*e)), Some(errs))
    } else {
        (0.0, None)
    };
    if let Some(budget) = opts.error_budget {
        if estimate > budget {
            return Err(FracError::QuadratureFailure { estimate, budget });
        }
    }
    Ok(OperatorResult {
        values: GridFunction::from_values(f.a(), f.b(), values)?,
        quad_error_estimate: estimate,
        node_errors,
        scheme: opts.scheme,
    })
}

/// Per-node error estimate `|F_h - F_2h| / 3` at shared nodes, spread to the
/// odd nodes as the larger neighbour.
fn richardson(
    op: Operator,
    spec: &KernelSpec,
    f: &GridFunction,
    opts: &OperatorOptions,
    fine: &[f64],
) -> Result<Vec<f64>> {
    let n = f.n();
    if !n.is_multiple_of(2) || n / 2 < op.min_grid() {
        return Err(FracError::invalid(format!(
            "error estimation needs an even n with n/2 >= {}, got n = {n}",
            op.min_grid()
        )));
    }
    let coarse = compute(op, spec, &f.subsample(2)?, opts)?;
    let mut errs = vec![0.0; n + 1];
    for (k, c) in coarse.iter().enumerate() {
        errs[2 * k] = (fine[2 * k] - c).abs() / 3.0;
    }
    for i in (1..n).step_by(2) {
        errs[i] = errs[i - 1].max(errs[i + 1]);
    }
    Ok(errs)
}

pub fn rl_integral_varorder(spec: &KernelSpec, f: &GridFunction) -> Result<OperatorResult> {
    apply(Operator::RlIntegral, spec, f, &OperatorOptions::default())
}

pub fn rl_deriv_classical(spec: &KernelSpec, f: &GridFunction) -> Result<OperatorResult> {
    apply(Operator::RlClassical, spec, f, &OperatorOptions::default())
}

pub fn caputo_deriv_classical(spec: &KernelSpec, f: &GridFunction) -> Result<OperatorResult> {
    apply(
        Operator::CaputoClassical,
        spec,
        f,
        &OperatorOptions::default(),
    )
}

pub fn aux_integral_1(spec: &KernelSpec, f: &GridFunction) -> Result<OperatorResult> {
    apply(Operator::Aux1, spec, f, &OperatorOptions::default())
}

pub fn aux_integral_2(spec: &KernelSpec, f: &GridFunction) -> Result<OperatorResult> {
    apply(Operator::Aux2, spec, f, &OperatorOptions::default())
}

pub fn rl_deriv_ns(spec: &KernelSpec, f: &GridFunction) -> Result<OperatorResult> {
    apply(Operator::RlNs, spec, f, &OperatorOptions::default())
}

pub fn caputo_deriv_ns(spec: &KernelSpec, f: &GridFunction) -> Result<OperatorResult> {
    apply(Operator::CaputoNs, spec, f, &OperatorOptions::default())
}

/// Named operators recovered from the general kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum SpecialCase {
    /// γ = β = α(t), ψ(t) = t.
    VariableMl,
    /// Constant α, γ = β = α, ψ(t) = t.
    Atangana,
    /// Constant α, γ = β = 1, ψ(t) = t.
    YangMachado,
    /// Constant α, γ = β = 1, ψ(t) = t; used with the Caputo-type operator.
    CaputoFabrizio,
    /// M ≡ 1, γ = β = 1, ψ(t) = t.
    UnitNormExp,
    /// ψ(t) = ln t.
    LogWarp { gamma: f64, beta: f64 },
    /// ψ(t) = sin t.
    SinWarp { gamma: f64, beta: f64 },
}

pub fn make_special_case(
    case: SpecialCase,
    order: OrderFunction,
    norm: NormalizationFunction,
    a: f64,
    b: f64,
) -> Result<KernelSpec> {
    let constant = |name: &str| {
        order
            .constant_value()
            .ok_or_else(|| FracError::invalid(format!("the {name} kernel needs a constant order")))
    };
    let id = WarpFunction::identity;
    match case {
        SpecialCase::VariableMl => KernelSpec::tied(order, id(), norm, a, b),
        SpecialCase::Atangana => {
            let alpha = constant("Atangana")?;
            KernelSpec::new(alpha, alpha, order, id(), norm, a, b)
        }
        SpecialCase::YangMachado => {
            constant("Yang-Machado")?;
            KernelSpec::new(1.0, 1.0, order, id(), norm, a, b)
        }
        SpecialCase::CaputoFabrizio => {
            constant("Caputo-Fabrizio")?;
            KernelSpec::new(1.0, 1.0, order, id(), norm, a, b)
        }
        SpecialCase::UnitNormExp => {
            KernelSpec::new(1.0, 1.0, order, id(), NormalizationFunction::unit(), a, b)
        }
        SpecialCase::LogWarp { gamma, beta } => {
            if a <= 0.0 {
                return Err(FracError::invalid(format!(
                    "log warp needs a > 0, got a = {a}"
                )));
            }
            KernelSpec::new(gamma, beta, order, WarpFunction::ln(), norm, a, b)
        }
        SpecialCase::SinWarp { gamma, beta } => {
            KernelSpec::new(gamma, beta, order, WarpFunction::sin(), norm, a, b)
        }
    }
}

/// True when the spec is an exponential kernel with identity warp and
/// constant order, the setting of the direct formulas in [`direct`].
pub fn is_plain_exponential(spec: &KernelSpec) -> bool {
    spec.is_exponential()
        && spec.warp().kind() == crate::kernel::WarpKind::Identity
        && spec.order().constant_value().is_some()
        && matches!(spec.orders(), KernelOrders::Fixed { .. })
}

#[cfg(test)]
mod tests;
