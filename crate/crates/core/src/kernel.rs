//! Order function α(t), warp ψ, normalization M and the kernel
//!
//! ```text
//! H(t, τ) = E_β( -α(t) (ψ(t) - ψ(τ))^γ / (1 - α(t)) ).
//! ```

use std::fmt;
use std::sync::Arc;

use crate::error::{FracError, Result};
use crate::expr::{parse, Bindings, Expr, Var};
use crate::mlf::{MLParams, MittagLeffler};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Points used to spot-check user-declared properties on an interval.
pub const SAMPLE_POINTS: usize = 1024;
/// Below this value of 1 - α the prefactor M(α)/(1-α) is refused.
pub const SINGULAR_GAP: f64 = 1e-12;
/// Relative accuracy requested from the Mittag-Leffler evaluator.
pub const KERNEL_TOL: f64 = 1e-13;

fn samples(a: f64, b: f64) -> impl Iterator<Item = f64> {
    let h = (b - a) / (SAMPLE_POINTS - 1) as f64;
    (0..SAMPLE_POINTS).map(move |i| {
        if i + 1 == SAMPLE_POINTS {
            b
        } else {
            a + i as f64 * h
        }
    })
}

fn expr_fn(e: Expr, var: Var) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
    move |x| e.eval(&Bindings::new().with(var, x)).unwrap_or(f64::NAN)
}

/// The variable order α(t) with declared range `[declared_min, declared_max]`.
#[derive(Clone)]
pub struct OrderFunction {
    f: ScalarFn,
    constant: Option<f64>,
    declared_min: f64,
    declared_max: f64,
    label: String,
}

impl fmt::Debug for OrderFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrderFunction")
            .field("label", &self.label)
            .field("declared_min", &self.declared_min)
            .field("declared_max", &self.declared_max)
            .finish()
    }
}

impl OrderFunction {
    /// A general order. The declared range must satisfy `0 < min ≤ max ≤ 1`;
    /// `max = 1` is accepted only so that the classical integral can be taken
    /// at order one.
    pub fn new<F>(
        f: F,
        declared_min: f64,
        declared_max: f64,
        label: impl Into<String>,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(declared_min > 0.0 && declared_min <= declared_max && declared_max <= 1.0) {
            return Err(FracError::invalid(format!(
                "order range [{declared_min}, {declared_max}] must satisfy 0 < min <= max <= 1"
            )));
        }
        Ok(OrderFunction {
            f: Arc::new(f),
            constant: None,
            declared_min,
            declared_max,
            label: label.into(),
        })
    }

    pub fn constant(alpha: f64) -> Result<Self> {
        let mut o = Self::new(move |_| alpha, alpha, alpha, alpha.to_string())?;
        o.constant = Some(alpha);
        Ok(o)
    }

    /// Parses an expression in `t`. A constant expression yields a constant order.
    pub fn from_expr(source: &str, declared_min: f64, declared_max: f64) -> Result<Self> {
        let e = parse(source, &[Var::T])?;
        if e.variables().is_empty() {
            let v = e.eval(&Bindings::new())?;
            return Self::constant(v);
        }
        Self::new(expr_fn(e, Var::T), declared_min, declared_max, source)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    pub fn declared_min(&self) -> f64 {
        self.declared_min
    }

    pub fn declared_max(&self) -> f64 {
        self.declared_max
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Spot-checks the declared range on [a, b].
    pub fn check_on(&self, a: f64, b: f64) -> Result<()> {
        for t in samples(a, b) {
            let v = self.eval(t);
            if !(v >= self.declared_min && v <= self.declared_max) {
                return Err(FracError::invalid(format!(
                    "order alpha({t}) = {v} outside declared range [{}, {}]",
                    self.declared_min, self.declared_max
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarpKind {
    Identity,
    Log,
    Sin,
    Custom,
}

/// An increasing warp ψ with its derivative.
#[derive(Clone)]
pub struct WarpFunction {
    psi: ScalarFn,
    dpsi: ScalarFn,
    kind: WarpKind,
    label: String,
}

impl fmt::Debug for WarpFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WarpFunction")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .finish()
    }
}

impl WarpFunction {
    pub fn new<F, D>(psi: F, dpsi: D, label: impl Into<String>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        WarpFunction {
            psi: Arc::new(psi),
            dpsi: Arc::new(dpsi),
            kind: WarpKind::Custom,
            label: label.into(),
        }
    }

    pub fn identity() -> Self {
        WarpFunction {
            kind: WarpKind::Identity,
            ..Self::new(|t| t, |_| 1.0, "t")
        }
    }

    pub fn ln() -> Self {
        WarpFunction {
            kind: WarpKind::Log,
            ..Self::new(f64::ln, |t| 1.0 / t, "ln(t)")
        }
    }

    pub fn sin() -> Self {
        WarpFunction {
            kind: WarpKind::Sin,
            ..Self::new(f64::sin, f64::cos, "sin(t)")
        }
    }

    /// Parses ψ(t) and differentiates it symbolically. `t`, `ln(t)` and
    /// `sin(t)` map to the built-in warps.
    pub fn from_expr(source: &str) -> Result<Self> {
        let e = parse(source, &[Var::T])?;
        if e == Expr::var(Var::T) {
            return Ok(Self::identity());
        }
        if e == parse("ln(t)", &[Var::T])? {
            return Ok(Self::ln());
        }
        if e == parse("sin(t)", &[Var::T])? {
            return Ok(Self::sin());
        }
        let d = e.derivative(Var::T);
        Ok(WarpFunction {
            psi: Arc::new(expr_fn(e, Var::T)),
            dpsi: Arc::new(expr_fn(d, Var::T)),
            kind: WarpKind::Custom,
            label: source.to_string(),
        })
    }

    /// The three warps named in the operator catalogue.
    pub fn builtins() -> [WarpFunction; 3] {
        [Self::identity(), Self::ln(), Self::sin()]
    }

    #[inline]
    pub fn psi(&self, t: f64) -> f64 {
        (self.psi)(t)
    }

    #[inline]
    pub fn dpsi(&self, t: f64) -> f64 {
        (self.dpsi)(t)
    }

    pub fn kind(&self) -> WarpKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Validates the warp on [a, b]: domain restrictions of the built-ins,
    /// ψ' > 0, and agreement of ψ' with central differences of ψ.
    pub fn check_on(&self, a: f64, b: f64) -> Result<()> {
        match self.kind {
            WarpKind::Log if a <= 0.0 => {
                return Err(FracError::invalid(format!(
                    "warp ln(t) needs a > 0, got a = {a}"
                )));
            }
            WarpKind::Sin if b - a >= std::f64::consts::PI || a.cos() <= 0.0 || b.cos() <= 0.0 => {
                return Err(FracError::invalid(format!(
                    "warp sin(t) needs cos(t) > 0 on [{a}, {b}]"
                )));
            }
            _ => {}
        }
        let h = 1e-4 * (b - a);
        for t in samples(a, b) {
            let p = self.psi(t);
            let d = self.dpsi(t);
            if !p.is_finite() || !(d > 0.0 && d.is_finite()) {
                return Err(FracError::invalid(format!(
                    "warp {} must be finite with positive derivative: psi({t}) = {p}, psi'({t}) = {d}",
                    self.label
                )));
            }
            let tc = t.clamp(a + h, b - h);
            let err = |h: f64| {
                let fd = (self.psi(tc + h) - self.psi(tc - h)) / (2.0 * h);
                (fd - self.dpsi(tc)).abs()
            };
            let e1 = err(h);
            let scale = 1.0 + self.dpsi(tc).abs();
            // accept a small error, or one that shrinks like h²
            if !(e1 <= 1e-6 * scale || err(0.5 * h) <= e1 / 3.0) {
                return Err(FracError::invalid(format!(
                    "derivative of warp {} is inconsistent with the warp near t = {tc} (error {e1:e})",
                    self.label
                )));
            }
        }
        Ok(())
    }
}

/// The normalization M(α), with M(0) = M(1) = 1 and M > 0 on [0, 1].
#[derive(Clone)]
pub struct NormalizationFunction {
    f: ScalarFn,
    unit: bool,
    label: String,
}

impl fmt::Debug for NormalizationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormalizationFunction")
            .field("label", &self.label)
            .finish()
    }
}

impl NormalizationFunction {
    pub fn unit() -> Self {
        NormalizationFunction {
            f: Arc::new(|_| 1.0),
            unit: true,
            label: "1".into(),
        }
    }

    pub fn new<F>(f: F, label: impl Into<String>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let m = NormalizationFunction {
            f: Arc::new(f),
            unit: false,
            label: label.into(),
        };
        for (x, name) in [(0.0, "M(0)"), (1.0, "M(1)")] {
            let v = m.eval(x);
            if v != 1.0 {
                return Err(FracError::invalid(format!("{name} = {v}, must equal 1")));
            }
        }
        for x in samples(0.0, 1.0) {
            let v = m.eval(x);
            if !(v > 0.0 && v.is_finite()) {
                return Err(FracError::invalid(format!("M({x}) = {v} must be positive")));
            }
        }
        Ok(m)
    }

    /// Parses M in the variable `alpha`.
    pub fn from_expr(source: &str) -> Result<Self> {
        let e = parse(source, &[Var::Alpha])?;
        if e == Expr::constant(1.0) {
            return Ok(Self::unit());
        }
        Self::new(expr_fn(e, Var::Alpha), source)
    }

    #[inline]
    pub fn eval(&self, alpha: f64) -> f64 {
        (self.f)(alpha)
    }

    pub fn is_unit(&self) -> bool {
        self.unit
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Kernel orders: fixed (γ, β), or tied to the order as γ = β = α(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelOrders {
    Fixed { gamma: f64, beta: f64 },
    Tied,
}

/// Everything needed to evaluate H on [a, b].
#[derive(Debug, Clone)]
pub struct KernelSpec {
    orders: KernelOrders,
    order: OrderFunction,
    warp: WarpFunction,
    norm: NormalizationFunction,
    a: f64,
    b: f64,
    ml: Option<Arc<MittagLeffler>>,
}

impl KernelSpec {
    pub fn new(
        gamma: f64,
        beta: f64,
        order: OrderFunction,
        warp: WarpFunction,
        norm: NormalizationFunction,
        a: f64,
        b: f64,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(FracError::invalid(format!(
                "gamma = {gamma} outside (0, 1]"
            )));
        }
        let params = MLParams::new(beta, KERNEL_TOL)?;
        let mut spec = Self::build(KernelOrders::Fixed { gamma, beta }, order, warp, norm, a, b)?;
        spec.ml = Some(Arc::new(MittagLeffler::new(params)));
        Ok(spec)
    }

    /// Kernel with γ = β = α(t), re-evaluated at every t.
    pub fn tied(
        order: OrderFunction,
        warp: WarpFunction,
        norm: NormalizationFunction,
        a: f64,
        b: f64,
    ) -> Result<Self> {
        Self::build(KernelOrders::Tied, order, warp, norm, a, b)
    }

    fn build(
        orders: KernelOrders,
        order: OrderFunction,
        warp: WarpFunction,
        norm: NormalizationFunction,
        a: f64,
        b: f64,
    ) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(FracError::invalid(format!(
                "interval [{a}, {b}] must be finite with a < b"
            )));
        }
        order.check_on(a, b)?;
        warp.check_on(a, b)?;
        Ok(KernelSpec {
            orders,
            order,
            warp,
            norm,
            a,
            b,
            ml: None,
        })
    }

    /// Same kernel on a different interval.
    pub fn with_interval(&self, a: f64, b: f64) -> Result<Self> {
        let mut s = Self::build(
            self.orders,
            self.order.clone(),
            self.warp.clone(),
            self.norm.clone(),
            a,
            b,
        )?;
        s.ml = self.ml.clone();
        Ok(s)
    }

    /// Same kernel with a different order function.
    pub fn with_order(&self, order: OrderFunction) -> Result<Self> {
        let mut s = Self::build(
            self.orders,
            order,
            self.warp.clone(),
            self.norm.clone(),
            self.a,
            self.b,
        )?;
        s.ml = self.ml.clone();
        Ok(s)
    }

    pub fn orders(&self) -> KernelOrders {
        self.orders
    }

    pub fn order(&self) -> &OrderFunction {
        &self.order
    }

    pub fn warp(&self) -> &WarpFunction {
        &self.warp
    }

    pub fn norm(&self) -> &NormalizationFunction {
        &self.norm
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// (γ, β) in effect at time t.
    pub fn gamma_beta_at(&self, t: f64) -> (f64, f64) {
        match self.orders {
            KernelOrders::Fixed { gamma, beta } => (gamma, beta),
            KernelOrders::Tied => {
                let a = self.order.eval(t);
                (a, a)
            }
        }
    }

    /// True when H(t, ·) is an exponential in ψ(t) - ψ(τ).
    pub fn is_exponential(&self) -> bool {
        matches!(self.orders, KernelOrders::Fixed { gamma, beta } if gamma == 1.0 && beta == 1.0)
    }

    fn check_point(&self, t: f64, what: &str) -> Result<()> {
        let slack = 1e-12 * (self.b - self.a);
        if !(t >= self.a - slack && t <= self.b + slack) {
            return Err(FracError::DomainError(format!(
                "{what} = {t} outside [{}, {}]",
                self.a, self.b
            )));
        }
        Ok(())
    }

    /// M(α(t)) / (1 - α(t)).
    pub fn prefactor(&self, t: f64) -> Result<f64> {
        self.check_point(t, "t")?;
        prefactor_for(&self.norm, self.order.eval(t), t)
    }

    /// Evaluator for H(t, ·) at a fixed t.
    pub fn row(&self, t: f64) -> Result<KernelRow> {
        self.check_point(t, "t")?;
        let alpha = self.order.eval(t);
        if !alpha.is_finite() {
            return Err(FracError::DomainError(format!("alpha({t}) = {alpha}")));
        }
        if 1.0 - alpha < SINGULAR_GAP {
            return Err(FracError::SingularOrder { t, alpha });
        }
        let (gamma, beta) = self.gamma_beta_at(t);
        let ml = match &self.ml {
            Some(ml) => ml.clone(),
            None => Arc::new(MittagLeffler::new(MLParams::new(beta, KERNEL_TOL)?)),
        };
        let psi_t = self.warp.psi(t);
        Ok(KernelRow {
            scale: alpha / (1.0 - alpha),
            gamma,
            psi_t,
            ml,
        })
    }

    /// H(t, τ).
    pub fn eval(&self, t: f64, tau: f64) -> Result<f64> {
        self.check_point(tau, "tau")?;
        if tau > t {
            return Err(FracError::DomainError(format!(
                "tau = {tau} exceeds t = {t}"
            )));
        }
        let row = self.row(t)?;
        row.at_psi(self.warp.psi(tau))
    }
}

pub(crate) fn prefactor_for(norm: &NormalizationFunction, alpha: f64, t: f64) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(FracError::DomainError(format!("alpha({t}) = {alpha}")));
    }
    if 1.0 - alpha < SINGULAR_GAP {
        return Err(FracError::SingularOrder { t, alpha });
    }
    let m = norm.eval(alpha);
    if !(m > 0.0 && m.is_finite()) {
        return Err(FracError::DomainError(format!("M({alpha}) = {m}")));
    }
    Ok(m / (1.0 - alpha))
}

/// H(t, ·) for fixed t, as a function of ψ(τ) or of the gap ψ(t) - ψ(τ).
#[derive(Debug, Clone)]
pub struct KernelRow {
    scale: f64,
    gamma: f64,
    psi_t: f64,
    ml: Arc<MittagLeffler>,
}

impl KernelRow {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.ml.params().beta()
    }

    pub fn psi_t(&self) -> f64 {
        self.psi_t
    }

    /// The factor α(t)/(1 - α(t)) multiplying the gap power.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// H as a function of ψ(τ).
    pub fn at_psi(&self, psi_tau: f64) -> Result<f64> {
        self.at_gap(self.psi_t - psi_tau)
    }

    /// H as a function of s = ψ(t) - ψ(τ) ≥ 0.
    pub fn at_gap(&self, s: f64) -> Result<f64> {
        let s = s.max(0.0);
        if s == 0.0 {
            return Ok(1.0);
        }
        let w = if self.gamma == 1.0 {
            s
        } else {
            s.powf(self.gamma)
        };
        let v = self.ml.eval(-self.scale * w)?;
        if !v.is_finite() {
            return Err(FracError::DomainError(format!(
                "kernel value {v} at gap {s}"
            )));
        }
        Ok(v)
    }
}

/// H(t, τ) for the given spec.
pub fn kernel_eval(spec: &KernelSpec, t: f64, tau: f64) -> Result<f64> {
    spec.eval(t, tau)
}

/// M(α(t)) / (1 - α(t)).
pub fn kernel_prefactor(spec: &KernelSpec, t: f64) -> Result<f64> {
    spec.prefactor(t)
}
