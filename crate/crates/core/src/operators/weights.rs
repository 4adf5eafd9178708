//! Panel integrals for product integration in the variable s = ψ(t) - ψ(τ).
//!
//! A panel is `s ∈ [B, A]` with width `d = A - B` and centre `m`. When the
//! panel is far from the singular end (`δ = d / 2m` small) the closed forms
//! subtract nearly equal powers, so they are replaced by binomial series in δ.

const SERIES_DELTA: f64 = 0.25;

/// `(A^p - B^p) / p` without cancellation for small `p`.
fn pow_diff(a: f64, b: f64, p: f64) -> f64 {
    if b == 0.0 {
        a.powf(p) / p
    } else {
        b.powf(p) * (p * (a / b).ln()).exp_m1() / p
    }
}

struct Binomial {
    e: f64,
    k: usize,
    c: f64,
}

impl Iterator for Binomial {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        let out = (self.k, self.c);
        self.k += 1;
        self.c *= (self.e - out.0 as f64) / self.k as f64;
        Some(out)
    }
}

fn binomial(e: f64) -> Binomial {
    Binomial { e, k: 0, c: 1.0 }
}

/// Sums `Σ_k term(k, C(e,k)) δ^{k+shift}` until the terms stall.
fn binomial_series(e: f64, delta: f64, shift: i32, term: impl Fn(usize, f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut dk = delta.powi(shift);
    for (k, c) in binomial(e).take(200) {
        let t = term(k, c) * dk;
        sum += t;
        if k > 2 && t.abs() <= 1e-17 * sum.abs() && c.abs() * dk <= 1e-17 * sum.abs() {
            break;
        }
        dk *= delta;
    }
    sum
}

/// `M0 = ∫_B^A s^e ds` and `M1 = ∫_B^A s^e (s - m) ds` for `e > -1`.
pub(crate) fn power_moments(e: f64, a: f64, b: f64) -> (f64, f64) {
    let d = a - b;
    let m = 0.5 * (a + b);
    if d <= 0.0 {
        return (0.0, 0.0);
    }
    if e == 0.0 {
        return (d, 0.0);
    }
    let delta = d / (2.0 * m);
    if delta <= SERIES_DELTA {
        let s0 = binomial_series(e, delta, 1, |k, c| {
            if k % 2 == 0 {
                2.0 * c / (k + 1) as f64
            } else {
                0.0
            }
        });
        let s1 = binomial_series(e, delta, 2, |k, c| {
            if k % 2 == 1 {
                2.0 * c / (k + 2) as f64
            } else {
                0.0
            }
        });
        let me = m.powf(e);
        (me * m * s0, me * m * m * s1)
    } else {
        let m0 = pow_diff(a, b, e + 1.0);
        let m1 = pow_diff(a, b, e + 2.0) - m * m0;
        (m0, m1)
    }
}

/// Product-integration weights against a power kernel: for `g` linear in
/// `u = ψ(τ)` with values `g0` at the far end (`s = A`) and `g1` at the near
/// end, `∫_B^A s^e g ds = g0 * w0 + g1 * w1`.
pub(crate) fn power_weights(e: f64, a: f64, b: f64) -> (f64, f64) {
    let d = a - b;
    if d <= 0.0 {
        return (0.0, 0.0);
    }
    let (m0, m1) = power_moments(e, a, b);
    // ℓ = (A - s)/d runs 0 → 1 across the panel; ∫ s^e ℓ = M0/2 - M1/d
    let lin = 0.5 * m0 - m1 / d;
    (m0 - lin, lin)
}

/// Weights for the product trapezoid with the kernel interpolated linearly in
/// `w = s^γ`. With `ω = (A^γ - s^γ)/(A^γ - B^γ)` and `ℓ = (A - s)/d`, returns
/// `(∫ ω ds, ∫ ω ℓ ds)` over the panel.
pub(crate) fn warped_weights(gamma: f64, a: f64, b: f64) -> (f64, f64) {
    let d = a - b;
    if d <= 0.0 {
        return (0.0, 0.0);
    }
    if gamma == 1.0 {
        return (0.5 * d, d / 3.0);
    }
    let m = 0.5 * (a + b);
    let delta = d / (2.0 * m);
    if delta <= SERIES_DELTA {
        let den = binomial_series(
            gamma,
            delta,
            0,
            |k, c| {
                if k % 2 == 1 {
                    2.0 * c
                } else {
                    0.0
                }
            },
        );
        let p1 = binomial_series(gamma, delta, 1, |k, c| match k {
            0 => 0.0,
            k if k % 2 == 0 => 2.0 * c * k as f64 / (k + 1) as f64,
            _ => 2.0 * c,
        });
        let p2 = binomial_series(gamma, delta, 1, |k, c| match k {
            0 => 0.0,
            k if k % 2 == 0 => c * (1.0 - 1.0 / (k + 1) as f64),
            k => c * (1.0 + 1.0 / (k + 2) as f64),
        });
        (m * p1 / den, m * p2 / den)
    } else {
        let ag = a.powf(gamma);
        let den = ag - b.powf(gamma);
        let m0 = pow_diff(a, b, gamma + 1.0);
        let m1 = pow_diff(a, b, gamma + 2.0) - m * m0;
        (
            (ag * d - m0) / den,
            (0.5 * ag * d - 0.5 * m0 + m1 / d) / den,
        )
    }
}
