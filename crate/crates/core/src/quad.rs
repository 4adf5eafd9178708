//! Gauss–Legendre rules and a globally adaptive composite integrator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{FracError, Result};

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on P_n starting from the Chebyshev-like initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Applies the rule on [a, b].
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub(crate) fn gl10() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(10))
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-10,
            max_panels: 2000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn estimate<F: Fn(f64) -> f64>(rule: &GaussLegendre, f: &F, a: f64, b: f64) -> Panel {
    let m = 0.5 * (a + b);
    let coarse = rule.integrate(f, a, b);
    let fine = rule.integrate(f, a, m) + rule.integrate(f, m, b);
    Panel {
        a,
        b,
        value: fine,
        error: (fine - coarse).abs(),
    }
}

/// Globally adaptive composite 10-point Gauss–Legendre: the panel with the
/// largest error estimate is bisected until the total estimate drops below
/// `max(abs_tol, rel_tol·|I|)`.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: AdaptiveOptions,
) -> Result<QuadResult> {
    let rule = gl10();
    let per_panel = 3 * rule.nodes.len();
    let mut heap = BinaryHeap::new();
    let first = estimate(rule, &f, a, b);
    let mut total = first.value;
    let mut err = first.error;
    heap.push(first);
    let mut evaluations = per_panel;
    loop {
        if !total.is_finite() || !err.is_finite() {
            return Err(FracError::NonConvergent(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            break;
        }
        if heap.len() >= opts.max_panels {
            return Err(FracError::NonConvergent(format!(
                "adaptive quadrature on [{a}, {b}] stalled at error {err:e} with {} panels",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        let left = estimate(rule, &f, worst.a, m);
        let right = estimate(rule, &f, m, worst.b);
        evaluations += 2 * per_panel;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // resum occasionally to stop drift in the running totals
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
        }
    }
    Ok(QuadResult {
        value: heap.iter().map(|p| p.value).sum(),
        error: err,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(10);
        let sum_w: f64 = rule.weights.iter().sum();
        assert!((sum_w - 2.0).abs() < 1e-14);
        // degree 19 is the highest exact degree
        let v = rule.integrate(&|x: f64| x.powi(18), 0.0, 1.0);
        assert!((v - 1.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let r = adaptive(|x: f64| x.powf(-0.5), 0.0, 1.0, AdaptiveOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn adaptive_sharp_peak() {
        // Lorentzian with width 1e-3: ∫_{-1}^{1} w/(x²+w²) dx = 2 atan(1/w)
        let w = 1e-3f64;
        let exact = 2.0 * (1.0 / w).atan();
        let r = adaptive(
            |x: f64| w / (x * x + w * w),
            -1.0,
            1.0,
            AdaptiveOptions::default(),
        )
        .unwrap();
        assert!(((r.value - exact) / exact).abs() < 1e-9);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let r = adaptive(|_| f64::NAN, 0.0, 1.0, AdaptiveOptions::default());
        assert!(matches!(r, Err(FracError::NonConvergent(_))));
    }
}
