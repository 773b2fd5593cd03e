use nalgebra::DMatrix;
use stokes_core::ieq::{solve_fixed_point, IeqParams, Mode, SignConvention};
use stokes_core::ode::OdeParams;
use stokes_core::oper::{
    det_invariant_p, det_invariant_q, oper_spectral_coords, parallel_transport, spectral_coords_de, OperConnection,
};
use stokes_core::periods::base_periods;
use stokes_core::theory::get_theory;
use stokes_core::{Complex64, ComplexPoly, DifferentialTuple, TheoryName};

fn reldiff(a: Complex64, b: Complex64) -> f64 {
    2.0 * (a - b).norm() / (a.norm() + b.norm())
}

#[test]
fn constant_connection_matches_matrix_exponential() {
    let c = Complex64::new(0.7, -0.3);
    let hbar = Complex64::new(0.8, 0.4);
    let w = DifferentialTuple::rank2(ComplexPoly::new(vec![c]));
    let conn = OperConnection::new(&w, hbar).unwrap();
    let (theta, r) = (0.6, 1.5);
    let t = parallel_transport(&conn, theta, r, &OdeParams::default()).unwrap();
    let s = -Complex64::from_polar(r, theta) / hbar;
    let m = DMatrix::from_row_slice(2, 2, &[Complex64::new(0.0, 0.0), -c * s, s, Complex64::new(0.0, 0.0)]);
    let e = m.exp();
    let d = (t - e).iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(d < 1e-10);
}

#[test]
fn a1a2_oper_agrees_with_ieq() {
    let th = get_theory(TheoryName::A1A2);
    let sol = solve_fixed_point(&th, &base_periods(&th), Mode::Oper, &IeqParams::default()).unwrap();
    assert!(sol.converged);
    let w = th.differentials_at_basepoint();
    for hinv in [0.01, 0.1, 0.5, 1.0, 2.0] {
        let hbar = Complex64::new(1.0 / hinv, 0.0);
        let de = oper_spectral_coords(&th, &w, hbar, &OdeParams::default(), SignConvention::Code).unwrap();
        let ie = sol.cluster_at(&th, hbar, SignConvention::Code).unwrap();
        for i in 0..2 {
            let rd = reldiff(de.coords.values[i], ie[i]);
            assert!(rd < 1e-9, "{hinv} X{}: {rd:e}", i + 1);
        }
    }
}

#[test]
fn determinant_invariants() {
    let th = get_theory(TheoryName::A2A2);
    let w = th.differentials_at_basepoint();
    let hbar = Complex64::from_polar(1.0, 0.1);
    let res = oper_spectral_coords(&th, &w, hbar, &OdeParams::default(), SignConvention::Paper).unwrap();
    let f = &res.frames;
    assert_eq!(f.vectors.len(), 6);
    assert!(det_invariant_p(f, &[1, 1, 2]).is_err());
    assert!(det_invariant_p(f, &[1, 2, 7]).is_err());
    let a = det_invariant_q(f, &[1, 2, 3, 4, 5, 6]).unwrap();
    let b = det_invariant_q(f, &[2, 1, 3, 4, 5, 6]).unwrap();
    assert!((a + b).norm() < 1e-14);
    assert!(det_invariant_q(f, &[1, 1, 3, 4, 5, 6]).is_err());
    // gauge invariance under a common unit-determinant change of basis
    let g = DMatrix::from_row_slice(3, 3, &[
        Complex64::new(1.2, 0.3), Complex64::new(-0.4, 0.1), Complex64::new(0.2, 0.0),
        Complex64::new(0.1, -0.5), Complex64::new(0.9, 0.2), Complex64::new(0.3, 0.3),
        Complex64::new(-0.2, 0.1), Complex64::new(0.5, 0.0), Complex64::new(1.1, -0.2),
    ]);
    let g = &g / g.determinant().powf(1.0 / 3.0);
    let mut moved = f.clone();
    for v in moved.vectors.iter_mut() {
        let nv = &g * nalgebra::DVector::from_column_slice(v);
        *v = nv.iter().copied().collect();
    }
    let x0 = spectral_coords_de(f, &th, SignConvention::Paper).unwrap().values;
    let x1 = spectral_coords_de(&moved, &th, SignConvention::Paper).unwrap().values;
    for (a, b) in x0.iter().zip(&x1) {
        assert!(reldiff(*a, *b) < 1e-10, "{a} {b}");
    }
}

#[test]
fn all_theories_oper_agree_with_ieq() {
    for name in [TheoryName::A1A3, TheoryName::A2A1, TheoryName::A2A2] {
        let th = get_theory(name);
        let sol = solve_fixed_point(&th, &base_periods(&th), Mode::Oper, &IeqParams::default()).unwrap();
        assert!(sol.converged, "{name}");
        let w = th.differentials_at_basepoint();
        for hinv in [0.3, 1.0] {
            let hbar = Complex64::from_polar(1.0 / hinv, th.theta0);
            let de = oper_spectral_coords(&th, &w, hbar, &OdeParams::default(), SignConvention::Paper).unwrap();
            let ie = sol.cluster_at(&th, hbar, SignConvention::Paper).unwrap();
            for i in 0..th.lattice_rank {
                let rd = reldiff(de.coords.values[i], ie[i]);
                assert!(rd < 1e-8, "{name} {hinv} X{}: {rd:e}", i + 1);
            }
        }
    }
}

#[test]
fn transport_has_unit_determinant() {
    let th = get_theory(TheoryName::A2A1);
    let w = th.differentials_at_basepoint();
    let conn = OperConnection::new(&w, Complex64::from_polar(1.3, 0.4)).unwrap();
    for (theta, r) in [(0.0, 2.0), (2.1, 3.5), (-1.0, 1.0)] {
        let t = parallel_transport(&conn, theta, r, &OdeParams::default()).unwrap();
        assert!((t.determinant() - 1.0).norm() < 1e-9, "{theta} {r}");
    }
}

#[test]
fn coordinates_ignore_vector_normalization() {
    let th = get_theory(TheoryName::A1A3);
    let w = th.differentials_at_basepoint();
    let hbar = Complex64::from_polar(1.0, th.theta0);
    let res = oper_spectral_coords(&th, &w, hbar, &OdeParams::default(), SignConvention::Code).unwrap();
    let mut scaled = res.frames.clone();
    for (k, v) in scaled.vectors.iter_mut().enumerate() {
        let s = Complex64::from_polar(0.5 + k as f64, 0.7 * k as f64 - 1.0);
        v.iter_mut().for_each(|x| *x *= s);
    }
    let x0 = spectral_coords_de(&res.frames, &th, SignConvention::Code).unwrap().values;
    let x1 = spectral_coords_de(&scaled, &th, SignConvention::Code).unwrap().values;
    for (a, b) in x0.iter().zip(&x1) {
        assert!(reldiff(*a, *b) < 1e-12, "{a} {b}");
    }
}
