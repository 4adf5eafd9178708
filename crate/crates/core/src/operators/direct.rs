//! Exponential-kernel operators written out directly: constant order α,
//! ψ(t) = t and `H(t, τ) = exp(-α (t - τ) / (1 - α))`. They use the same
//! product trapezoid as the general path (with the kernel linear in τ).

use crate::error::{FracError, Result};
use crate::grid::{differentiate, GridFunction};

fn rate(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0 - crate::kernel::SINGULAR_GAP) {
        return Err(FracError::invalid(format!(
            "alpha = {alpha} must lie in (0, 1)"
        )));
    }
    Ok(alpha / (1.0 - alpha))
}

/// `∫_a^{t_i} exp(-c (t_i - τ)) g(τ) dτ` with `g` piecewise linear.
fn exp_convolution(c: f64, t: &[f64], g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for i in 1..t.len() {
        let mut acc = 0.0;
        for j in 0..i {
            let d = t[j + 1] - t[j];
            let h0 = (-c * (t[i] - t[j])).exp();
            let h1 = (-c * (t[i] - t[j + 1])).exp();
            let (dh, dg) = (h1 - h0, g[j + 1] - g[j]);
            acc += d * (h0 * g[j] + 0.5 * (h0 * dg + dh * g[j]) + dh * dg / 3.0);
        }
        out[i] = acc;
    }
    out
}

/// `M/(1-α) ∫_a^t exp(-α(t-τ)/(1-α)) f'(τ) dτ` (Caputo-Fabrizio when M is the
/// normalization value M(α)).
pub fn caputo_exponential(alpha: f64, m: f64, f: &GridFunction) -> Result<Vec<f64>> {
    let c = rate(alpha)?;
    let t = f.nodes();
    let inner = exp_convolution(c, &t, &f.deriv_values());
    Ok(inner.into_iter().map(|v| m / (1.0 - alpha) * v).collect())
}

/// `M/(1-α) d/dt ∫_a^t exp(-α(t-τ)/(1-α)) f(τ) dτ` (Yang-Machado type).
pub fn rl_exponential(alpha: f64, m: f64, f: &GridFunction) -> Result<Vec<f64>> {
    let c = rate(alpha)?;
    let t = f.nodes();
    let inner = exp_convolution(c, &t, f.values());
    let d = differentiate(&inner, f.h());
    Ok(d.into_iter().map(|v| m / (1.0 - alpha) * v).collect())
}
