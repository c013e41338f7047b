use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use htoda::convex::{make_power_potential, make_toda_potential, ConjugatePair, Energy, QuadraticForm, SeparableConvexFunction};
use htoda::geometry::{
    alpha_connection, basis_pairing_check, basis_pairing_check_energy, connection_duality_residual, cubic_at,
    geometry_report, metric_at, CoordinateTag, EnergyTag, MetricComponents,
};

fn toda_u_star(n: usize) -> Energy {
    let toda = make_toda_potential(1.0, 1.0).unwrap();
    Energy::Separable(SeparableConvexFunction::uniform(&toda.flipped(), n).unwrap())
}

#[test]
fn toda_dual_metric_closed_form() {
    // U*'' = 1/(1 - q*) and U*''' = 1/(1 - q*)^2 for A = B = 1
    let u = toda_u_star(2);
    let x = [0.3, -2.0];
    let g = metric_at(&u, &x, EnergyTag::U, CoordinateTag::Dual).unwrap();
    let c = cubic_at(&u, &x, EnergyTag::U, CoordinateTag::Dual).unwrap();
    for (a, xa) in x.iter().enumerate() {
        let r = 1.0 - xa;
        assert_relative_eq!(g.g[(a, a)], 1.0 / r, epsilon = 1e-14);
        assert_relative_eq!(c.get(a, a, a), 1.0 / (r * r), epsilon = 1e-14);
    }
    assert_eq!(g.g[(0, 1)], 0.0);
    assert_eq!(c.get(0, 0, 1), 0.0);
}

#[test]
fn report_at_origin_has_the_expected_connections() {
    let u = toda_u_star(1);
    let r = geometry_report(&u, &[0.0], &[-1.0, 0.0, 1.0], EnergyTag::U, CoordinateTag::Dual).unwrap();
    assert_eq!(r.gamma_alpha["1"], vec![vec![vec![0.0]]]);
    assert_eq!(r.gamma_alpha["-1"], r.cubic);
    assert_eq!(r.gamma_alpha["0"][0][0][0] * 2.0, r.cubic[0][0][0]);
    let json = serde_json::to_value(&r).unwrap();
    for key in ["point", "metric", "inverse_metric", "cubic", "gamma_alpha"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn quadratic_energy_is_flat() {
    let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
    let e = Energy::quadratic(QuadraticForm::pure(m).unwrap()).unwrap();
    let c = cubic_at(&e, &[0.3, 0.1], EnergyTag::K, CoordinateTag::Primal).unwrap();
    assert!(c.c.iter().all(|&v| v == 0.0));
}

#[test]
fn metric_requires_positive_definiteness() {
    let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let err = MetricComponents::new(bad, EnergyTag::K, CoordinateTag::Primal).unwrap_err();
    assert_eq!(err.kind(), "ConvexityError");
}

#[test]
fn metric_inverse_is_the_dual_metric() {
    let pair = make_toda_potential(1.0, 1.0).unwrap();
    let primal = Energy::Separable(SeparableConvexFunction::uniform(&pair, 2).unwrap());
    let dual = toda_u_star(2);
    let x = [0.4, -0.7];
    let y = primal.gradient(&x).unwrap();
    let g = metric_at(&primal, &x, EnergyTag::U, CoordinateTag::Primal).unwrap();
    let g_star = metric_at(&dual, &y, EnergyTag::U, CoordinateTag::Dual).unwrap();
    assert!((g.inverse() - g_star.g).amax() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn levi_civita_is_half_the_cubic_form(x0 in -3.0f64..0.9, x1 in -3.0f64..0.9) {
        let u = toda_u_star(2);
        let c = cubic_at(&u, &[x0, x1], EnergyTag::U, CoordinateTag::Dual).unwrap();
        let g0 = alpha_connection(&c, 0.0);
        let gm = alpha_connection(&c, -1.0);
        let gp = alpha_connection(&c, 1.0);
        for i in 0..c.c.len() {
            prop_assert_eq!(c.c[i], 2.0 * g0.gamma[i]);
            prop_assert_eq!(c.c[i], gm.gamma[i]);
            prop_assert_eq!(gp.gamma[i], 0.0);
        }
        prop_assert_eq!(c.max_asymmetry(), 0.0);
    }

    #[test]
    fn dual_connections_sum_to_metric_derivative(
        x0 in -3.0f64..0.9,
        x1 in 0.1f64..2.0,
        alpha in -1.0f64..1.0,
    ) {
        let toda = make_toda_potential(1.0, 1.0).unwrap();
        let power = make_power_potential(1.5).unwrap();
        let u = Energy::Separable(SeparableConvexFunction::new(vec![toda.flipped(), power.flipped()], None).unwrap());
        let x = [x0, x1];
        let c = cubic_at(&u, &x, EnergyTag::U, CoordinateTag::Dual).unwrap();
        let r = connection_duality_residual(&c, |p| metric_at(&u, p, EnergyTag::U, CoordinateTag::Dual), &x, alpha).unwrap();
        prop_assert!(r <= 1e-6, "residual {}", r);
    }

    #[test]
    fn gradient_bases_are_biorthogonal(x in -3.0f64..3.0, k in 0.1f64..5.0) {
        let toda = make_toda_potential(1.0, 1.0).unwrap();
        prop_assert!(basis_pairing_check(&toda, x).unwrap() <= 1e-12);
        let quad = ConjugatePair::quadratic(k).unwrap();
        prop_assert!(basis_pairing_check(&quad, x).unwrap() <= 1e-12);
        let e = Energy::Separable(SeparableConvexFunction::uniform(&toda, 2).unwrap());
        prop_assert!(basis_pairing_check_energy(&e, &[x, -x]).unwrap() <= 1e-10);
    }
}
