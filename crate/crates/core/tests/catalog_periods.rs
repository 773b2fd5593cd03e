use std::collections::BTreeMap;

use stokes_core::periods::{base_periods, is_pure_flavor, numeric_period_n2, numeric_periods, period_of};
use stokes_core::theory::{
    build_differentials, choose_radius, get_theory, normalize_quasi_monic_centered, scale_differentials,
    stokes_ray_directions, RadiusKind,
};
use stokes_core::{ChargeVector, Complex64, ComplexPoly, TheoryName};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn table_period_values() {
    let a12 = base_periods(&get_theory(TheoryName::A1A2));
    assert!((a12.values[0] - c(-2.52393, 1.45719)).norm() < 1e-5);
    assert!((a12.values[0].norm() - 2.91438).abs() < 1e-5);
    let a13 = base_periods(&get_theory(TheoryName::A1A3));
    assert!((a13.values[0].re - 3.49608).abs() < 1e-5);
    let a21 = base_periods(&get_theory(TheoryName::A2A1));
    assert!((a21.values[0] - c(-2.00324, 1.15657)).norm() < 1e-5);
    assert!((a21.values[1] - c(0.0, -2.31315)).norm() < 1e-5);
    let a22 = base_periods(&get_theory(TheoryName::A2A2));
    assert!((a22.values[0] - c(2.30298, 0.0)).norm() < 1e-5);
    assert!((a22.values[3] - c(0.0, -4.98697)).norm() < 1e-5);
}

#[test]
fn quadrature_reproduces_table_periods() {
    for name in TheoryName::ALL {
        let th = get_theory(name);
        let numeric = numeric_periods(&th, &BTreeMap::new()).unwrap();
        for (i, (a, b)) in numeric.values.iter().zip(&th.base_periods).enumerate() {
            assert!((a - b).norm() < 1e-9 * b.norm(), "{name} Z{}: {a} vs {b}", i + 1);
        }
    }
}

#[test]
fn degenerate_root_rejected() {
    let p = ComplexPoly::from_real(&[0.0, 0.0, 1.0]);
    assert!(numeric_period_n2(&p, c(0.0, 0.0), c(0.0, 0.0), 1.0).is_err());
}

#[test]
fn flavor_and_linearity() {
    let a13 = get_theory(TheoryName::A1A3);
    let pv = base_periods(&a13);
    let f = ChargeVector(vec![0, 1, -1]);
    assert!(period_of(&f, &pv).unwrap().norm() < 1e-14);
    assert!(is_pure_flavor(&f, &a13).unwrap());
    let a22 = get_theory(TheoryName::A2A2);
    assert!(is_pure_flavor(&ChargeVector(vec![0, 0, 1, 0]), &a22).unwrap());
    let a12 = get_theory(TheoryName::A1A2);
    assert!(!is_pure_flavor(&ChargeVector(vec![1, 0]), &a12).unwrap());
    let pv = base_periods(&a12);
    let s = period_of(&ChargeVector(vec![1, 1]), &pv).unwrap();
    assert!((s - pv.values[0] - pv.values[1]).norm() < 1e-15);
    assert!(period_of(&ChargeVector(vec![1]), &pv).is_err());
}

#[test]
fn period_scaling_under_differential_scaling() {
    // Z(t w) = t Z(w) for rank 2: y dz scales by t when P2 scales by t^2
    let th = get_theory(TheoryName::A1A2);
    let w = th.differentials_at_basepoint();
    let t = c(0.7, 0.4);
    let ws = scale_differentials(&w, t).unwrap();
    let roots = w.p2.roots();
    let near = |z: Complex64| *roots.iter().min_by(|a, b| (*a - z).norm().total_cmp(&(*b - z).norm())).unwrap();
    let om = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let base = numeric_period_n2(&w.p2, near(c(1.0, 0.0)), near(om), 1.0).unwrap();
    let scaled = numeric_period_n2(&ws.p2, near(c(1.0, 0.0)), near(om), 1.0).unwrap();
    let rel = (scaled - t * base).norm() / base.norm();
    let rel_flip = (scaled + t * base).norm() / base.norm();
    assert!(rel.min(rel_flip) < 1e-9, "{rel} {rel_flip}");
}

#[test]
fn family_examples() {
    let th = get_theory(TheoryName::A1A2);
    let mut p = BTreeMap::new();
    p.insert("lambda".to_string(), c(0.0, 0.8));
    let w = build_differentials(&th, &p).unwrap();
    assert_eq!(w.p2.coeffs(), &[c(-1.0, 0.0), c(0.0, -0.8), c(0.0, 0.0), c(1.0, 0.0)]);
    p.insert("bogus".to_string(), c(1.0, 0.0));
    assert!(build_differentials(&th, &p).is_err());
    let a21 = get_theory(TheoryName::A2A1);
    let mut q = BTreeMap::new();
    q.insert("c".to_string(), c(0.0, 0.0));
    let w = build_differentials(&a21, &q).unwrap();
    assert!(w.p2.is_zero());
    let s = scale_differentials(&w, c(0.0, 1.0)).unwrap();
    assert!((s.p3.coeff(0) - c(0.0, -0.5)).norm() < 1e-15);
}

#[test]
fn normalization_postconditions() {
    let th = get_theory(TheoryName::A1A2);
    let w = th.differentials_at_basepoint();
    let scaled = scale_differentials(&w, c(8f64.sqrt(), 0.0)).unwrap();
    let (n, _) = normalize_quasi_monic_centered(&scaled);
    assert!((n.p2.leading().norm() - 1.0).abs() < 1e-13);
    assert!(n.p2.coeff(2).norm() < 1e-13);
    let shifted = stokes_core::DifferentialTuple::rank2(ComplexPoly::from_real(&[0.0, 0.0, 3.0, 1.0]));
    let (n, f) = normalize_quasi_monic_centered(&shifted);
    assert!(n.p2.coeff(2).norm() < 1e-13);
    assert!((f.b - c(-1.0, 0.0)).norm() < 1e-13);
}

#[test]
fn radius_rule() {
    let th = get_theory(TheoryName::A1A2);
    let w = th.differentials_at_basepoint();
    assert!((choose_radius(&w, RadiusKind::Oper) - 8.0).abs() < 1e-12);
    let w = stokes_core::DifferentialTuple::rank2(ComplexPoly::from_real(&[-10.0, 1.0, -10.0, 1.0]));
    assert!((choose_radius(&w, RadiusKind::Oper) - 80.0).abs() < 1e-9);
}

#[test]
fn sector_count() {
    for name in TheoryName::ALL {
        let th = get_theory(name);
        let dirs = stokes_ray_directions(&th.differentials_at_basepoint(), c(1.0, 0.0)).unwrap();
        assert_eq!(dirs.len(), th.degree + th.rank);
    }
    let th = get_theory(TheoryName::A1A2);
    assert!(stokes_ray_directions(&th.differentials_at_basepoint(), c(0.0, 0.0)).is_err());
}
