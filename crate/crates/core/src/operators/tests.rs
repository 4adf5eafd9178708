use super::*;
use crate::mlf::{ml_eval, MLParams};
use crate::quad::{adaptive, AdaptiveOptions};
use crate::special::gamma;
use proptest::prelude::*;

fn constant_spec(gamma: f64, beta: f64, alpha: f64) -> KernelSpec {
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

fn max_err(values: &GridFunction, exact: impl Fn(f64) -> f64, from: f64) -> f64 {
    (0..=values.n())
        .filter(|&i| values.t(i) >= from)
        .map(|i| (values.values()[i] - exact(values.t(i))).abs())
        .fold(0.0, f64::max)
}

fn poly(n: usize) -> GridFunction {
    GridFunction::with_deriv(0.0, 1.0, n, |t| t * t, |t| 2.0 * t).unwrap()
}

fn linear(n: usize) -> GridFunction {
    GridFunction::with_deriv(0.0, 1.0, n, |t| t, |_| 1.0).unwrap()
}

fn one(n: usize) -> GridFunction {
    GridFunction::with_deriv(0.0, 1.0, n, |_| 1.0, |_| 0.0).unwrap()
}

#[test]
fn rl_integral_examples() {
    let spec = constant_spec(0.5, 0.5, 1.0);
    let r = rl_integral_varorder(&spec, &one(64)).unwrap();
    assert!(max_err(&r.values, |t| t, 0.0) < 1e-14);

    let spec = constant_spec(0.5, 0.5, 0.5);
    let r = rl_integral_varorder(&spec, &one(64)).unwrap();
    let g15 = gamma(1.5);
    assert!(max_err(&r.values, |t| t.sqrt() / g15, 0.0) < 1e-13);
    let r = rl_integral_varorder(&spec, &linear(64)).unwrap();
    let g25 = gamma(2.5);
    assert!(max_err(&r.values, |t| t.powf(1.5) / g25, 0.0) < 1e-13);

    let zero = GridFunction::from_fn(0.0, 1.0, 32, |_| 0.0).unwrap();
    let r = rl_integral_varorder(&spec, &zero).unwrap();
    assert!(r.values.values().iter().all(|v| *v == 0.0));
}

#[test]
fn rl_integral_converges_for_curved_data() {
    let spec = constant_spec(0.5, 0.5, 0.3);
    let exact = |t: f64| 2.0 * t.powf(2.3) / gamma(3.3);
    let e1 = max_err(
        &rl_integral_varorder(&spec, &poly(64)).unwrap().values,
        exact,
        0.0,
    );
    let e2 = max_err(
        &rl_integral_varorder(&spec, &poly(128)).unwrap().values,
        exact,
        0.0,
    );
    assert!(e1 < 1e-3 && e1 / e2 > 3.0, "{e1} {e2}");
}

#[test]
fn exponent_location_only_matters_for_variable_order() {
    let spec = constant_spec(0.5, 0.5, 0.4);
    let f = poly(64);
    let tau = OperatorOptions {
        exponent_at: ExponentAt::Tau,
        ..Default::default()
    };
    let a = apply(Operator::RlIntegral, &spec, &f, &OperatorOptions::default()).unwrap();
    let b = apply(Operator::RlIntegral, &spec, &f, &tau).unwrap();
    assert_eq!(a.values, b.values);

    let order = OrderFunction::from_expr("0.3 + 0.4*t", 0.3, 0.7).unwrap();
    let spec = spec.with_order(order).unwrap();
    let a = apply(Operator::RlIntegral, &spec, &f, &OperatorOptions::default()).unwrap();
    let b = apply(Operator::RlIntegral, &spec, &f, &tau).unwrap();
    let diff = (a.values.values()[64] - b.values.values()[64]).abs();
    assert!(diff > 1e-3);
}

#[test]
fn rl_classical_of_constant() {
    let spec = constant_spec(0.5, 0.5, 0.5);
    let r = rl_deriv_classical(&spec, &one(256)).unwrap();
    let g = gamma(0.5);
    let err = max_err(&r.values, |t| 1.0 / (t.sqrt() * g), 0.25);
    assert!(err < 1e-4, "{err}");
    assert!(matches!(
        rl_deriv_classical(&spec, &one(8)),
        Err(FracError::DegenerateGrid { n: 8, min: 16 })
    ));
    let zero = GridFunction::from_fn(0.0, 1.0, 32, |_| 0.0).unwrap();
    assert!(rl_deriv_classical(&spec, &zero).unwrap().values.max_abs() == 0.0);
}

#[test]
fn rl_classical_small_order_is_near_identity() {
    let spec = constant_spec(0.5, 0.5, 1e-4);
    let r = rl_deriv_classical(&spec, &poly(256)).unwrap();
    assert!(max_err(&r.values, |t| t * t, 0.1) < 1e-3);
}

#[test]
fn caputo_classical_examples() {
    let spec = constant_spec(0.5, 0.5, 0.5);
    assert_eq!(
        caputo_deriv_classical(&spec, &one(32))
            .unwrap()
            .values
            .max_abs(),
        0.0
    );
    let r = caputo_deriv_classical(&spec, &linear(64)).unwrap();
    let g15 = gamma(1.5);
    assert!(max_err(&r.values, |t| t.sqrt() / g15, 0.0) < 1e-13);
    let r = caputo_deriv_classical(&spec, &poly(64)).unwrap();
    let g25 = gamma(2.5);
    assert!(max_err(&r.values, |t| 2.0 * t.powf(1.5) / g25, 0.0) < 1e-13);
}

#[test]
fn caputo_forms_agree() {
    let spec = constant_spec(0.5, 0.5, 0.4)
        .with_interval(1.0, 2.0)
        .unwrap();
    let spec = KernelSpec::new(
        0.5,
        0.5,
        spec.order().clone(),
        WarpFunction::ln(),
        NormalizationFunction::unit(),
        1.0,
        2.0,
    )
    .unwrap();
    let f = GridFunction::with_deriv(1.0, 2.0, 512, f64::sin, f64::cos).unwrap();
    let std = OperatorOptions {
        caputo_form: CaputoForm::StandardPsi,
        ..Default::default()
    };
    let a = apply(
        Operator::CaputoClassical,
        &spec,
        &f,
        &OperatorOptions::default(),
    )
    .unwrap();
    let b = apply(Operator::CaputoClassical, &spec, &f, &std).unwrap();
    for i in 0..=512 {
        assert!((a.values.values()[i] - b.values.values()[i]).abs() < 1e-3);
    }
}

#[test]
fn exponential_kernel_auxiliary_integrals() {
    let spec = cf(0.5);
    let r = aux_integral_1(&spec, &one(256)).unwrap();
    assert!(max_err(&r.values, |t| 1.0 - (-t).exp(), 0.0) < 1e-5);
    let r = aux_integral_2(&spec, &linear(256)).unwrap();
    assert!(max_err(&r.values, |t| 1.0 - (-t).exp(), 0.0) < 1e-5);
    assert_eq!(
        aux_integral_2(&spec, &one(32)).unwrap().values.max_abs(),
        0.0
    );
    let zero = GridFunction::from_fn(0.0, 1.0, 32, |_| 0.0).unwrap();
    assert_eq!(aux_integral_1(&spec, &zero).unwrap().values.max_abs(), 0.0);
}

#[test]
fn small_order_auxiliary_integral_is_increment() {
    let spec = constant_spec(0.5, 0.5, 1e-8);
    let f = GridFunction::with_deriv(0.0, 1.0, 512, f64::sin, f64::cos).unwrap();
    let r = aux_integral_2(&spec, &f).unwrap();
    assert!(max_err(&r.values, f64::sin, 0.0) < 1e-6);
}

#[test]
fn exponential_kernel_derivatives() {
    let spec = cf(0.5);
    let r = rl_deriv_ns(&spec, &one(512)).unwrap();
    assert!(max_err(&r.values, |t| 2.0 * (-t).exp(), 0.0) < 1e-5);
    let r = caputo_deriv_ns(&spec, &linear(1024)).unwrap();
    let v = r.values.values()[1024];
    assert!((v - 2.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-6, "{v}");
    assert_eq!(
        caputo_deriv_ns(&spec, &one(64)).unwrap().values.max_abs(),
        0.0
    );
}

#[test]
fn small_order_derivatives_recover_function() {
    let spec = constant_spec(0.5, 0.5, 1e-8);
    let f = GridFunction::with_deriv(0.0, 1.0, 512, f64::sin, f64::cos).unwrap();
    let c = caputo_deriv_ns(&spec, &f).unwrap();
    assert!((c.values.values()[512] - 1f64.sin()).abs() < 1e-5);
    let r = rl_deriv_ns(&spec, &f).unwrap();
    assert!(max_err(&r.values, f64::sin, 0.0) < 1e-5);
}

#[test]
fn general_path_matches_direct_exponential_formulas() {
    for alpha in [0.2, 0.5, 0.8] {
        let spec = cf(alpha);
        for f in [
            linear(200),
            poly(200),
            GridFunction::with_deriv(
                0.0,
                1.0,
                200,
                |t| (3.0 * t).cos(),
                |t| -3.0 * (3.0 * t).sin(),
            )
            .unwrap(),
        ] {
            let general = caputo_deriv_ns(&spec, &f).unwrap();
            let d = direct::caputo_exponential(alpha, 1.0, &f).unwrap();
            let general_rl = rl_deriv_ns(&spec, &f).unwrap();
            let d_rl = direct::rl_exponential(alpha, 1.0, &f).unwrap();
            for i in 0..=200 {
                assert!((general.values.values()[i] - d[i]).abs() < 1e-12);
                assert!((general_rl.values.values()[i] - d_rl[i]).abs() < 1e-12);
            }
        }
    }
    assert!(is_plain_exponential(&cf(0.5)));
}

#[test]
fn caputo_fabrizio_grid_convergence() {
    let spec = cf(0.5);
    // ∫_0^t e^{-(t-τ)} 2τ dτ = 2(t - 1 + e^{-t}), times prefactor 2
    let exact = |t: f64| 4.0 * (t - 1.0 + (-t).exp());
    let errs: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| {
            max_err(
                &caputo_deriv_ns(&spec, &poly(n)).unwrap().values,
                exact,
                0.0,
            )
        })
        .collect();
    assert!(
        errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0,
        "{errs:?}"
    );
}

/// ∫_0^t H(t,τ) f'(τ) dτ by adaptive quadrature with direct kernel evaluation.
fn aux2_oracle(g: f64, b: f64, alpha: f64, df: impl Fn(f64) -> f64, t: f64) -> f64 {
    let p = MLParams::with_beta(b).unwrap();
    let c = alpha / (1.0 - alpha);
    let integrand = |tau: f64| ml_eval(p, -c * (t - tau).powf(g)).unwrap() * df(tau);
    let opts = AdaptiveOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_panels: 4000,
    };
    adaptive(integrand, 0.0, t, opts).unwrap().value
}

#[test]
fn mittag_leffler_kernel_grid_convergence() {
    for (g, b) in [(0.6, 0.6), (0.3, 0.8)] {
        let spec = constant_spec(g, b, 0.5);
        let ts = [0.25, 0.5, 1.0];
        let oracle: Vec<f64> = ts
            .iter()
            .map(|&t| aux2_oracle(g, b, 0.5, f64::cos, t))
            .collect();
        let err = |n: usize| {
            let f = GridFunction::with_deriv(0.0, 1.0, n, f64::sin, f64::cos).unwrap();
            let r = aux_integral_2(&spec, &f).unwrap();
            ts.iter()
                .zip(&oracle)
                .map(|(t, o)| (r.values.values()[(t * n as f64).round() as usize] - o).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(64), err(128), err(256));
        assert!(
            e1 / e2 > 3.0 && e2 / e3 > 3.0,
            "g={g} b={b}: {e1} {e2} {e3}"
        );
        assert!(e3 < 1e-5);
    }
}

#[test]
fn midpoint_and_trapezoid_agree() {
    let spec = constant_spec(0.7, 0.7, 0.4);
    let f = GridFunction::with_deriv(0.0, 1.0, 512, f64::exp, f64::exp).unwrap();
    let mid = OperatorOptions {
        scheme: Scheme::ProductMidpoint,
        ..Default::default()
    };
    let a = apply(Operator::CaputoNs, &spec, &f, &OperatorOptions::default()).unwrap();
    let b = apply(Operator::CaputoNs, &spec, &f, &mid).unwrap();
    assert_eq!(b.scheme, Scheme::ProductMidpoint);
    for i in 0..=512 {
        assert!((a.values.values()[i] - b.values.values()[i]).abs() < 1e-4);
    }
}

#[test]
fn limits_in_small_order_are_monotone() {
    let f = GridFunction::with_deriv(0.0, 1.0, 256, |t| t.exp(), |t| t.exp()).unwrap();
    let target_c = 1f64.exp() - 1.0;
    let mut prev_c = f64::INFINITY;
    let mut prev_r = f64::INFINITY;
    for eps in [1e-2, 1e-4, 1e-6] {
        let spec = constant_spec(0.5, 0.5, eps);
        let c = (caputo_deriv_ns(&spec, &f).unwrap().values.values()[256] - target_c).abs();
        let r = (rl_deriv_ns(&spec, &f).unwrap().values.values()[256] - 1f64.exp()).abs();
        assert!(c < prev_c && r <= prev_r + 1e-9, "{eps}: {c} {r}");
        prev_c = c;
        prev_r = r;
    }
    assert!(prev_c < 1e-5);
}

#[test]
fn special_cases() {
    let s = cf(0.5);
    assert!((s.eval(1.0, 0.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);

    let at = make_special_case(
        SpecialCase::Atangana,
        OrderFunction::constant(0.6).unwrap(),
        NormalizationFunction::unit(),
        0.0,
        1.0,
    )
    .unwrap();
    let expected = ml_eval(
        MLParams::with_beta(0.6).unwrap(),
        -0.6 * 0.7f64.powf(0.6) / 0.4,
    )
    .unwrap();
    assert!((at.eval(0.9, 0.2).unwrap() - expected).abs() < 1e-14);

    let order = OrderFunction::from_expr("0.5 + 0.1*sin(t)", 0.4, 0.6).unwrap();
    let lw = make_special_case(
        SpecialCase::LogWarp {
            gamma: 0.5,
            beta: 0.5,
        },
        order.clone(),
        NormalizationFunction::unit(),
        1.0,
        2.0,
    )
    .unwrap();
    assert_eq!(lw.warp().kind(), crate::kernel::WarpKind::Log);
    assert!((lw.warp().dpsi(1.6) - 1.0 / 1.6).abs() < 1e-15);

    assert!(make_special_case(
        SpecialCase::LogWarp {
            gamma: 0.5,
            beta: 0.5
        },
        order.clone(),
        NormalizationFunction::unit(),
        0.0,
        1.0
    )
    .is_err());
    assert!(matches!(
        make_special_case(
            SpecialCase::Atangana,
            order.clone(),
            NormalizationFunction::unit(),
            0.0,
            1.0
        ),
        Err(FracError::InvalidParam(_))
    ));
    let vm = make_special_case(
        SpecialCase::VariableMl,
        order.clone(),
        NormalizationFunction::unit(),
        0.0,
        1.0,
    )
    .unwrap();
    let a = order.eval(0.8);
    assert_eq!(vm.gamma_beta_at(0.8), (a, a));
    let m = NormalizationFunction::from_expr("1 - alpha + alpha^2").unwrap();
    let un = make_special_case(SpecialCase::UnitNormExp, order.clone(), m, 0.0, 1.0).unwrap();
    assert!(un.norm().is_unit());
    let sw = make_special_case(
        SpecialCase::SinWarp {
            gamma: 0.4,
            beta: 0.9,
        },
        order,
        NormalizationFunction::unit(),
        0.0,
        1.0,
    )
    .unwrap();
    assert_eq!(sw.warp().kind(), crate::kernel::WarpKind::Sin);
}

#[test]
fn error_estimate_and_budget() {
    let spec = constant_spec(0.6, 0.6, 0.5);
    let f = GridFunction::with_deriv(0.0, 1.0, 128, f64::sin, f64::cos).unwrap();
    let opts = OperatorOptions {
        estimate_error: true,
        ..Default::default()
    };
    let r = apply(Operator::CaputoNs, &spec, &f, &opts).unwrap();
    assert!(r.quad_error_estimate > 0.0 && r.quad_error_estimate < 1e-4);
    assert_eq!(r.node_errors.as_ref().unwrap().len(), 129);
    let tight = OperatorOptions {
        error_budget: Some(1e-12),
        ..Default::default()
    };
    assert!(matches!(
        apply(Operator::CaputoNs, &spec, &f, &tight),
        Err(FracError::QuadratureFailure { .. })
    ));
    let odd = GridFunction::with_deriv(0.0, 1.0, 33, f64::sin, f64::cos).unwrap();
    assert!(apply(Operator::CaputoNs, &spec, &odd, &opts).is_err());
}

#[test]
fn grid_must_match_interval() {
    let spec = constant_spec(0.6, 0.6, 0.5);
    let f = GridFunction::from_fn(0.0, 2.0, 32, f64::sin).unwrap();
    assert!(matches!(
        caputo_deriv_ns(&spec, &f),
        Err(FracError::InvalidParam(_))
    ));
}

#[test]
fn order_one_prefactor_is_singular() {
    let spec = constant_spec(0.6, 0.6, 1.0);
    assert!(matches!(
        caputo_deriv_ns(&spec, &linear(32)),
        Err(FracError::SingularOrder { .. })
    ));
    assert!(matches!(
        caputo_deriv_classical(&spec, &linear(32)),
        Err(FracError::SingularOrder { .. })
    ));
}

fn arb_spec() -> impl Strategy<Value = KernelSpec> {
    (0.2f64..1.0, 0.2f64..1.0, 0.05f64..0.9, any::<bool>()).prop_map(|(g, b, a, warp)| {
        let w = if warp {
            WarpFunction::identity()
        } else {
            WarpFunction::sin()
        };
        KernelSpec::new(
            g,
            b,
            OrderFunction::constant(a).unwrap(),
            w,
            NormalizationFunction::unit(),
            0.0,
            1.0,
        )
        .unwrap()
    })
}

fn trig(c: [f64; 3], n: usize) -> GridFunction {
    GridFunction::with_deriv(
        0.0,
        1.0,
        n,
        move |t| c[0] + c[1] * (2.0 * t).sin() + c[2] * (3.0 * t).cos(),
        move |t| 2.0 * c[1] * (2.0 * t).cos() - 3.0 * c[2] * (3.0 * t).sin(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operators_are_linear(
        spec in arb_spec(),
        cf_ in prop::array::uniform3(-2.0f64..2.0),
        cg in prop::array::uniform3(-2.0f64..2.0),
        c1 in -3.0f64..3.0,
        c2 in -3.0f64..3.0,
    ) {
        let (f, g) = (trig(cf_, 32), trig(cg, 32));
        let combo = GridFunction::lincomb(c1, &f, c2, &g).unwrap();
        for op in Operator::ALL {
            let opts = OperatorOptions::default();
            let lhs = apply(op, &spec, &combo, &opts).unwrap().values;
            let df = apply(op, &spec, &f, &opts).unwrap().values;
            let dg = apply(op, &spec, &g, &opts).unwrap().values;
            let rhs = GridFunction::lincomb(c1, &df, c2, &dg).unwrap();
            let scale = 1.0 + lhs.max_abs();
            for i in 0..=32 {
                prop_assert!((lhs.values()[i] - rhs.values()[i]).abs() <= 1e-11 * scale, "{:?} node {}", op, i);
            }
        }
    }

    #[test]
    fn aux1_is_bounded_by_warp_increment(spec in arb_spec(), c in prop::array::uniform3(-2.0f64..2.0)) {
        let f = trig(c, 64);
        let r = aux_integral_1(&spec, &f).unwrap().values;
        let fmax = f.max_abs();
        let psi0 = spec.warp().psi(0.0);
        for i in 0..=64 {
            let bound = (spec.warp().psi(r.t(i)) - psi0) * fmax;
            prop_assert!(r.values()[i].abs() <= bound * (1.0 + 1e-12) + 1e-15);
        }
    }
}
