//! Functions sampled on a uniform grid.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};

pub const MIN_SUBINTERVALS: usize = 8;

/// Values `f(a + i h)`, `i = 0..=n`, with an optional analytic derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    a: f64,
    b: f64,
    values: Vec<f64>,
    deriv: Option<Vec<f64>>,
}

impl GridFunction {
    pub fn from_values(a: f64, b: f64, values: Vec<f64>) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(FracError::invalid(format!(
                "grid interval [{a}, {b}] must satisfy a < b"
            )));
        }
        let n = values.len().saturating_sub(1);
        if n < MIN_SUBINTERVALS {
            return Err(FracError::DegenerateGrid {
                n,
                min: MIN_SUBINTERVALS,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FracError::invalid(format!(
                "grid value {} at node {i} is not finite",
                values[i]
            )));
        }
        Ok(GridFunction {
            a,
            b,
            values,
            deriv: None,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> Result<Self> {
        let h = (b - a) / n as f64;
        let values = (0..=n).map(|i| f(node(a, b, h, n, i))).collect();
        Self::from_values(a, b, values)
    }

    /// Samples `f` and its derivative `df`.
    pub fn with_deriv<F, D>(a: f64, b: f64, n: usize, f: F, df: D) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let g = Self::from_fn(a, b, n, f)?;
        let d = (0..=n).map(|i| df(g.t(i))).collect();
        g.with_deriv_values(d)
    }

    /// Attaches derivative values after checking them against central
    /// differences of the function values.
    pub fn with_deriv_values(mut self, deriv: Vec<f64>) -> Result<Self> {
        if deriv.len() != self.values.len() {
            return Err(FracError::invalid(format!(
                "derivative has {} values, grid has {}",
                deriv.len(),
                self.values.len()
            )));
        }
        if let Some(i) = deriv.iter().position(|v| !v.is_finite()) {
            return Err(FracError::invalid(format!(
                "derivative at node {i} is not finite"
            )));
        }
        let h = self.h();
        let fmax = self.max_abs();
        let dmax = deriv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 1..self.n() {
            let cd = (self.values[i + 1] - self.values[i - 1]) / (2.0 * h);
            // central differences miss by h²/6 f''' plus rounding
            let lo = i.saturating_sub(1).max(1);
            let hi = (i + 1).min(self.n() - 1);
            let third = (lo..=hi)
                .map(|k| (deriv[k + 1] - 2.0 * deriv[k] + deriv[k - 1]).abs())
                .fold(0.0f64, f64::max);
            let tol = third + 1e3 * f64::EPSILON * fmax / h + 1e-9 * dmax.max(1.0);
            if (cd - deriv[i]).abs() > tol {
                return Err(FracError::invalid(format!(
                    "derivative at node {i} (t = {}) is {} but central difference gives {cd}",
                    self.t(i),
                    deriv[i]
                )));
            }
        }
        self.deriv = Some(deriv);
        Ok(self)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n() as f64
    }

    /// Node `i`; the last node is exactly `b`.
    pub fn t(&self, i: usize) -> f64 {
        node(self.a, self.b, self.h(), self.n(), i)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n()).map(|i| self.t(i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn has_deriv(&self) -> bool {
        self.deriv.is_some()
    }

    /// The supplied derivative, or second-order finite differences of the values.
    pub fn deriv_values(&self) -> Cow<'_, [f64]> {
        match &self.deriv {
            Some(d) => Cow::Borrowed(d),
            None => Cow::Owned(differentiate(&self.values, self.h())),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Piecewise-linear interpolation, clamped to [a, b].
    pub fn interpolate(&self, t: f64) -> f64 {
        let x = ((t - self.a) / self.h()).clamp(0.0, self.n() as f64);
        let i = (x.floor() as usize).min(self.n() - 1);
        let w = x - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Every `step`-th node. `step` must divide `n`.
    pub fn subsample(&self, step: usize) -> Result<Self> {
        if step == 0 || !self.n().is_multiple_of(step) {
            return Err(FracError::invalid(format!(
                "subsample step {step} does not divide n = {}",
                self.n()
            )));
        }
        let pick = |v: &[f64]| v.iter().step_by(step).copied().collect::<Vec<_>>();
        let mut g = Self::from_values(self.a, self.b, pick(&self.values))?;
        g.deriv = self.deriv.as_deref().map(pick);
        Ok(g)
    }

    /// `c1 f + c2 g` on a shared grid.
    pub fn lincomb(c1: f64, f: &Self, c2: f64, g: &Self) -> Result<Self> {
        if f.a != g.a || f.b != g.b || f.n() != g.n() {
            return Err(FracError::invalid("grid functions live on different grids"));
        }
        let values = f
            .values
            .iter()
            .zip(&g.values)
            .map(|(x, y)| c1 * x + c2 * y)
            .collect();
        let mut out = Self::from_values(f.a, f.b, values)?;
        if let (Some(df), Some(dg)) = (&f.deriv, &g.deriv) {
            out.deriv = Some(df.iter().zip(dg).map(|(x, y)| c1 * x + c2 * y).collect());
        }
        Ok(out)
    }

    pub(crate) fn same_grid(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && self.n() == other.n()
    }
}

fn node(a: f64, b: f64, h: f64, n: usize, i: usize) -> f64 {
    if i == n {
        b
    } else {
        a + i as f64 * h
    }
}

/// Second-order differences: central inside, one-sided three-point at the ends.
pub fn differentiate(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len() - 1;
    let mut d = vec![0.0; n + 1];
    for i in 1..n {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    d[n] = (3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) / (2.0 * h);
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_coarse_and_non_finite() {
        assert!(matches!(
            GridFunction::from_fn(0.0, 1.0, 4, |t| t),
            Err(FracError::DegenerateGrid { n: 4, .. })
        ));
        assert!(GridFunction::from_fn(0.0, 1.0, 16, |t| 1.0 / (t - 0.5)).is_err());
        assert!(GridFunction::from_fn(1.0, 1.0, 16, |t| t).is_err());
    }

    #[test]
    fn derivative_consistency() {
        assert!(GridFunction::with_deriv(0.0, 3.0, 64, f64::sin, f64::cos).is_ok());
        assert!(GridFunction::with_deriv(0.0, 1.0, 64, f64::exp, f64::exp).is_ok());
        assert!(GridFunction::with_deriv(0.0, 3.0, 64, f64::sin, |t| t.cos() + 0.01).is_err());
        assert!(GridFunction::with_deriv(0.0, 3.0, 64, f64::sin, |t| -t.cos()).is_err());
    }

    #[test]
    fn finite_difference_derivative_is_second_order() {
        let err = |n| {
            let g = GridFunction::from_fn(0.0, 2.0, n, f64::sin).unwrap();
            let d = g.deriv_values();
            (0..=n)
                .map(|i| (d[i] - g.t(i).cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn interpolate_and_subsample() {
        let g = GridFunction::from_fn(0.0, 1.0, 16, |t| 2.0 * t + 1.0).unwrap();
        assert!((g.interpolate(0.33) - 1.66).abs() < 1e-14);
        assert_eq!(g.interpolate(2.0), 3.0);
        let s = g.subsample(2).unwrap();
        assert_eq!(s.n(), 8);
        assert_eq!(s.values()[8], 3.0);
        assert!(g.subsample(3).is_err());
        assert_eq!(g.t(16), 1.0);
    }
}
