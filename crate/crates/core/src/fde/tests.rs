use super::*;
use crate::kernel::{NormalizationFunction, OrderFunction, WarpFunction};
use crate::operators::{make_special_case, SpecialCase};
use proptest::prelude::*;

fn cf_on(alpha: f64, a: f64, b: f64, warp: WarpFunction) -> KernelSpec {
    KernelSpec::new(
        1.0,
        1.0,
        OrderFunction::constant(alpha).unwrap(),
        warp,
        NormalizationFunction::unit(),
        a,
        b,
    )
    .unwrap()
}

fn cf(alpha: f64) -> KernelSpec {
    make_special_case(
        SpecialCase::CaputoFabrizio,
        OrderFunction::constant(alpha).unwrap(),
        NormalizationFunction::unit(),
        0.0,
        1.0,
    )
    .unwrap()
}

fn ml(gamma: f64, beta: f64, alpha: f64) -> KernelSpec {
    KernelSpec::new(
        gamma,
        beta,
        OrderFunction::constant(alpha).unwrap(),
        WarpFunction::identity(),
        NormalizationFunction::unit(),
        0.0,
        1.0,
    )
    .unwrap()
}

fn linear(lambda: f64) -> Rhs {
    Rhs::new(move |_, u| lambda * u, "lambda u").with_du(move |_, _| lambda)
}

fn last(r: &SolveReport) -> f64 {
    *r.solution.values().last().unwrap()
}

fn grid_fn(n: usize, f: impl Fn(f64) -> f64) -> GridFunction {
    GridFunction::from_fn(0.0, 1.0, n, f).unwrap()
}

// Exponential kernel, constant α, f = λu: u(t) = u0 exp(αλ(ψ(t) - ψ(a)) / (1 - (1 - α)λ)).
fn exponential_solution(alpha: f64, lambda: f64, dpsi: f64) -> f64 {
    (alpha * lambda * dpsi / (1.0 - (1.0 - alpha) * lambda)).exp()
}

#[test]
fn zero_rhs_keeps_the_initial_value() {
    let p = FdeProblem::new(cf(0.5), Rhs::new(|_, _| 0.0, "0"), 2.5, 64).unwrap();
    let r = solve_fde(&p).unwrap();
    assert!(r.solution.values().iter().all(|&v| v == 2.5));
    assert_eq!(r.compatibility, 0.0);
}

#[test]
fn caputo_fabrizio_linear_problem() {
    let p = FdeProblem::new(cf(0.5), linear(-1.0), 1.0, 1024).unwrap();
    let r = solve_fde(&p).unwrap();
    let exact = 0.7165313105737893;
    assert!((last(&r) - exact).abs() < 1e-5, "{}", last(&r));
    assert!(r.residual_norm < 1e-9);
    assert_eq!(r.compatibility, 1.0);
    let err = (0..=1024)
        .map(|i| (r.solution.values()[i] - (-r.solution.t(i) / 3.0).exp()).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-5, "{err}");
}

#[test]
fn literal_formulation_has_an_initial_layer() {
    // jump u(0+) = P u0 / (P - λ) = 2/3, then the same exponential decay
    let p = FdeProblem::new(cf(0.5), linear(-1.0), 1.0, 1024)
        .unwrap()
        .with_formulation(Formulation::Literal);
    let r = solve_fde(&p).unwrap();
    let exact = 0.4776875403825262;
    assert!((last(&r) - exact).abs() < 1e-3, "{}", last(&r));
}

#[test]
fn compatible_data_make_the_formulations_agree() {
    let rhs = Rhs::new(|t, u| -u + (1.0 + t).ln() - 0.5, "f");
    let p = FdeProblem::new(cf(0.4), rhs, -0.5, 128).unwrap();
    let a = solve_fde(&p).unwrap();
    let b = solve_fde(&p.clone().with_formulation(Formulation::Literal)).unwrap();
    for (x, y) in a.solution.values().iter().zip(b.solution.values()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn second_order_under_refinement() {
    let err = |n: usize| {
        let p = FdeProblem::new(cf(0.5), linear(-1.0), 1.0, n).unwrap();
        (last(&solve_fde(&p).unwrap()) - 0.7165313105737893).abs()
    };
    let (e1, e2) = (err(64), err(128));
    assert!(e1 / e2 > 3.5, "{e1} {e2}");
}

#[test]
fn warped_exponential_problem() {
    // ψ = ln t on [1, 2]; the equation is the unwarped one in s = ln t
    let spec = cf_on(0.3, 1.0, 2.0, WarpFunction::ln());
    let p = FdeProblem::new(spec, linear(-2.0), 1.0, 512).unwrap();
    let r = solve_fde(&p).unwrap();
    let exact = exponential_solution(0.3, -2.0, 2f64.ln());
    assert!((last(&r) - exact).abs() < 1e-5, "{} vs {exact}", last(&r));
}

#[test]
fn mittag_leffler_kernel_converges() {
    let rhs = Rhs::from_expr("-u^3 - u + sin(t)").unwrap();
    let value = |n| {
        let p = FdeProblem::new(ml(0.6, 0.8, 0.5), rhs.clone(), 0.5, n).unwrap();
        last(&solve_fde(&p).unwrap())
    };
    let (a, b, c) = (value(64), value(128), value(256));
    let ratio = (a - b) / (b - c);
    assert!(ratio > 2.5, "{a} {b} {c} ratio {ratio}");
}

#[test]
fn residual_is_recomputed_independently() {
    let rhs = Rhs::from_expr("-u^3 - u").unwrap();
    let p = FdeProblem::new(ml(0.7, 0.7, 0.4), rhs.clone(), 1.0, 64).unwrap();
    let r = solve_fde(&p).unwrap();
    let d = discrete_caputo(p.spec(), &r.solution).unwrap();
    assert_eq!(d[0], 0.0);
    let f0 = rhs.eval(0.0, 1.0);
    for (i, di) in d.iter().enumerate().skip(1) {
        let t = r.solution.t(i);
        let u = r.solution.values()[i];
        let shift = p.spec().eval(t, 0.0).unwrap() * f0;
        assert!((di - rhs.eval(t, u) + shift).abs() < 1e-9, "node {i}");
    }
}

#[test]
fn symbolic_and_numeric_du_agree() {
    let rhs = Rhs::from_expr("-exp(u) * t").unwrap();
    let numeric = Rhs::new(|t, u| -u.exp() * t, "numeric");
    for &(t, u) in &[(0.5, 0.1), (1.0, -2.0), (0.2, 1.5)] {
        assert!((rhs.du(t, u) - numeric.du(t, u)).abs() < 1e-6);
    }
}

#[test]
fn problem_validation() {
    assert!(matches!(
        FdeProblem::new(cf(0.5), linear(-1.0), 1.0, 8),
        Err(FracError::DegenerateGrid { n: 8, min: 16 })
    ));
    let bad = Rhs::new(|t, _| (t - 0.5).ln(), "ln(t - 1/2)");
    assert!(matches!(
        FdeProblem::new(cf(0.5), bad, 0.0, 32),
        Err(FracError::DomainError(_))
    ));
    let near_one = ml(1.0, 1.0, 1.0);
    let p = FdeProblem::new(near_one, linear(-1.0), 1.0, 32).unwrap();
    assert!(matches!(
        solve_fde(&p),
        Err(FracError::SingularOrder { .. })
    ));
}

#[test]
fn missing_root_reports_the_node() {
    let rhs = Rhs::new(|_, u| 1e3 * u.exp(), "1000 e^u");
    let p = FdeProblem::new(cf(0.5), rhs, 0.0, 32)
        .unwrap()
        .with_formulation(Formulation::Literal);
    assert!(matches!(
        solve_fde(&p),
        Err(FracError::NewtonDivergence { node: 1, .. })
    ));
}

#[test]
fn non_smooth_rhs_is_solved() {
    let rhs = Rhs::new(|_, u: f64| -u.cbrt() - 1.0, "-cbrt(u) - 1");
    assert!(newton(&|x: f64| x.cbrt(), &|x: f64| x.cbrt() / (3.0 * x), 1.0).is_some());
    assert_eq!(
        bisect(&|x: f64| x.cbrt() - 0.5, 0.0).map(|(x, _)| (x * 1e8).round()),
        Some(12500000.0)
    );
    let p = FdeProblem::new(cf(0.5), rhs, 0.0, 32).unwrap();
    let r = solve_fde(&p).unwrap();
    assert!(r.residual_norm < 1e-8);
}

#[test]
fn comparison_examples() {
    let spec = cf(0.5);
    let one = grid_fn(256, |_| 1.0);
    let r = check_comparison(&spec, &grid_fn(256, |t| -1.0 - t), &one).unwrap();
    assert_eq!(r.outcome, ComparisonOutcome::Pass);
    assert!(r.max_q < 0.0);
    let r = check_comparison(&spec, &grid_fn(256, |_| 0.0), &one).unwrap();
    assert_eq!(r.outcome, ComparisonOutcome::Pass);
    let r = check_comparison(&spec, &grid_fn(256, |t| t), &one).unwrap();
    assert!(matches!(
        r.outcome,
        ComparisonOutcome::NotApplicable { node: 1, .. }
    ));
}

#[test]
fn comparison_rejects_bad_q() {
    let spec = cf(0.5);
    let u = grid_fn(64, |t| -t);
    let neg = grid_fn(64, |t| t - 0.5);
    assert!(matches!(
        check_comparison(&spec, &u, &neg),
        Err(FracError::HypothesisViolation(_))
    ));
    let zero_at_a = grid_fn(64, |t| t);
    assert!(matches!(
        check_comparison(&spec, &u, &zero_at_a),
        Err(FracError::HypothesisViolation(_))
    ));
}

#[test]
fn random_comparison_cases() {
    let t = comparison_trials(&cf(0.5), 128, 24, 7).unwrap();
    assert!(t.violations.is_empty(), "{:?}", t.violations);
    assert_eq!(t.passes, 24);
    let t = comparison_trials(&ml(0.5, 0.7, 0.3), 64, 8, 11).unwrap();
    assert!(t.violations.is_empty());
}

#[test]
fn uniqueness_examples() {
    let p = FdeProblem::new(cf(0.5), Rhs::from_expr("-u^3 - u").unwrap(), 1.0, 256).unwrap();
    let r = uniqueness_probe(&p, 8).unwrap();
    assert_eq!(r.runs, 9);
    assert!(r.max_divergence < 1e-8, "{}", r.max_divergence);

    let p = FdeProblem::new(cf(0.5), Rhs::from_expr("0").unwrap(), 1.0, 64).unwrap();
    assert_eq!(uniqueness_probe(&p, 4).unwrap().max_divergence, 0.0);

    let p = FdeProblem::new(cf(0.5), Rhs::from_expr("u").unwrap(), 1.0, 64).unwrap();
    assert!(matches!(
        uniqueness_probe(&p, 4),
        Err(FracError::HypothesisViolation(_))
    ));
}

#[test]
fn sandwich_with_envelope_bounds() {
    let n = 256;
    let rhs = Rhs::from_expr("-u + 0.5*sin(t)").unwrap();
    let p = FdeProblem::new(cf(0.5), rhs, 1.0, n).unwrap();
    let upper = LinearBound::new(-1.0, grid_fn(n, |_| 0.5)).unwrap();
    let lower = LinearBound::new(-1.0, grid_fn(n, |_| -0.5)).unwrap();
    let r = sandwich_check(&p, &lower, &upper).unwrap();
    let bc = r.bound_check.unwrap();
    assert_eq!(bc.violations, 0);
    assert!(bc.hypothesis_held);
    assert_eq!(r.formulation, Formulation::Literal);
}

#[test]
fn sandwich_with_coincident_bounds() {
    let n = 128;
    let rhs = Rhs::from_expr("-u + sin(t)").unwrap();
    let p = FdeProblem::new(cf(0.5), rhs, 1.0, n).unwrap();
    let b = LinearBound::new(-1.0, grid_fn(n, f64::sin)).unwrap();
    let r = sandwich_check(&p, &b, &b).unwrap();
    let bc = r.bound_check.unwrap();
    for i in 0..=n {
        let u = r.solution.values()[i];
        assert!((bc.lower.values()[i] - u).abs() < 1e-9);
        assert!((bc.upper.values()[i] - u).abs() < 1e-9);
    }
}

#[test]
fn sandwich_reports_a_false_bound() {
    let n = 64;
    let p = FdeProblem::new(cf(0.5), Rhs::from_expr("-u + 0.5*sin(t)").unwrap(), 1.0, n).unwrap();
    let upper = LinearBound::new(-1.0, grid_fn(n, |_| -10.0)).unwrap();
    let lower = LinearBound::new(-1.0, grid_fn(n, |_| -0.5)).unwrap();
    match sandwich_check(&p, &lower, &upper) {
        Err(FracError::BoundViolation {
            hypothesis_held,
            node,
            ..
        }) => {
            assert!(!hypothesis_held);
            assert!(node >= 1);
        }
        other => panic!("expected a bound violation, got {other:?}"),
    }
    assert!(LinearBound::new(0.5, grid_fn(n, |_| 0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_decay_stays_between_zero_and_start(alpha in 0.05f64..0.9, lambda in -5.0f64..-0.1, u0 in 0.1f64..3.0) {
        let p = FdeProblem::new(cf(alpha), linear(lambda), u0, 64).unwrap()
            .with_formulation(Formulation::Literal);
        let r = solve_fde(&p).unwrap();
        let v = r.solution.values();
        prop_assert!(v.iter().all(|&x| x > 0.0 && x <= u0 * (1.0 + 1e-12)));
        prop_assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn exponential_oracle_over_parameters(alpha in 0.1f64..0.8, lambda in -3.0f64..-0.1) {
        let p = FdeProblem::new(cf(alpha), linear(lambda), 1.0, 256).unwrap();
        let r = solve_fde(&p).unwrap();
        let exact = exponential_solution(alpha, lambda, 1.0);
        prop_assert!((last(&r) - exact).abs() < 1e-4 * (1.0 + lambda.abs()));
    }
}
