use proptest::prelude::*;
use stokes_core::ieq::SignConvention;
use stokes_core::ode::OdeParams;
use stokes_core::pde::{
    hitchin_setup, hitchin_spectral_coords_de, interpolate_field, model_u0, newton_solve, newton_solve_u,
    richardson_error, Grid2D, PdeMethod, PdeParams, SelfDuality,
};
use stokes_core::theory::get_theory;
use stokes_core::{Complex64, ComplexPoly, StokesError, TheoryName};

// X1 (code convention) on the 255 grid of half-width 4, frozen from the euler backend
const X1_AT_255: f64 = -0.0064201265;

#[test]
fn a1a2_backends_agree() {
    let th = get_theory(TheoryName::A1A2);
    let w = th.differentials_at_basepoint();
    let (n, r) = hitchin_setup(&w, 1.0).unwrap();
    assert_eq!(r, 4.0);
    let grid = Grid2D::new(255, r).unwrap();
    let mut fields = Vec::new();
    for method in [PdeMethod::Euler, PdeMethod::Fourier] {
        let params = PdeParams { method, nmesh: 255, ..PdeParams::default() };
        let sol = newton_solve_u(n.top(), 2, grid, &params).unwrap();
        assert!(sol.newton_iterations <= 8, "{method:?}: {}", sol.newton_iterations);
        assert!(sol.residual_norm < params.thresh);
        fields.push(sol.u.values);
    }
    let d = fields[0].iter().zip(&fields[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(d < 1e-9, "{d:e}");
    for method in [PdeMethod::Euler, PdeMethod::Fourier] {
        let params = PdeParams { method, nmesh: 255, ..PdeParams::default() };
        let res = hitchin_spectral_coords_de(&th, &w, 1.0, Complex64::new(1.0, 0.0), &params, &OdeParams::default(), SignConvention::Code)
            .unwrap();
        let x = &res.coords.values;
        assert!((x[0].re - X1_AT_255).abs() < 1e-9 && x[0].im.abs() < 1e-12, "{method:?} {x:?}");
        assert!((x[1] + 1.0).norm() < 1e-9, "{method:?} {x:?}");
    }
}

/// `u = 0.3 sin x cos y + 0.1 x y` with `P = z` and the matching source.
fn manufactured(nmesh: usize) -> (SelfDuality, Vec<f64>, Vec<f64>) {
    let exact = |x: f64, y: f64| 0.3 * x.sin() * y.cos() + 0.1 * x * y;
    let lap = |x: f64, y: f64| -0.6 * x.sin() * y.cos();
    let grid = Grid2D::new(nmesh, 1.0).unwrap();
    let p = ComplexPoly::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
    let mut problem = SelfDuality::new(&p, 2, grid);
    let side = grid.side();
    let mut source = vec![0.0; side * side];
    let mut u = vec![0.0; side * side];
    let mut start = vec![0.0; side * side];
    for i in 0..side {
        for j in 0..side {
            let (x, y) = (grid.coord(i), grid.coord(j));
            let k = grid.index(i, j);
            let v = exact(x, y);
            u[k] = v;
            source[k] = lap(x, y) - 4.0 * ((2.0 * v).exp() - (-2.0 * v).exp() * (x * x + y * y));
            if grid.is_boundary(i, j) {
                start[k] = v;
            }
        }
    }
    problem.source = Some(source);
    (problem, u, start)
}

#[test]
fn manufactured_solution_second_order() {
    for method in [PdeMethod::Euler, PdeMethod::Fourier] {
        let mut errs = Vec::new();
        for n in [31, 63, 127] {
            let (problem, exact, start) = manufactured(n);
            let start = stokes_core::pde::FieldGrid { grid: problem.grid, kind: stokes_core::pde::FieldKind::U, values: start };
            let params = PdeParams { method, nmesh: n, thresh: 1e-11, ..PdeParams::default() };
            let sol = newton_solve(&problem, &start, &params).unwrap();
            errs.push(sol.u.values.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        for w in errs.windows(2) {
            let p = (w[0] / w[1]).log2();
            assert!((1.8..=2.2).contains(&p), "{method:?} {errs:?}");
        }
    }
}

#[test]
fn model_solution_far_field() {
    let grid = Grid2D::new(63, 10.0).unwrap();
    let p = ComplexPoly::from_real(&[-1.0, 0.0, 0.0, 1.0]);
    for (rank, coef) in [(2, 0.25), (3, 1.0 / 3.0)] {
        let u0 = model_u0(&p, grid, rank);
        // the mollifier vanishes outside 0.9 r
        for (i, j) in [(0, 0), (0, 32), (64, 10)] {
            let z = grid.point(i, j);
            let expect = coef * p.eval(z).norm_sqr().ln();
            assert!((u0.at(i, j) - expect).abs() < 1e-12, "rank {rank}");
        }
        assert!(u0.values.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn backend_limits() {
    let p = ComplexPoly::from_real(&[-1.0, 0.0, 0.0, 1.0]);
    let fourier = PdeParams { method: PdeMethod::Fourier, nmesh: 100, ..PdeParams::default() };
    let err = newton_solve_u(&p, 2, Grid2D::new(100, 4.0).unwrap(), &fourier).unwrap_err();
    assert!(matches!(err, StokesError::GridShape(100)));
    let euler = PdeParams { method: PdeMethod::Euler, nmesh: 2047, ..PdeParams::default() };
    let err = newton_solve_u(&p, 2, Grid2D::new(2047, 4.0).unwrap(), &euler).unwrap_err();
    assert!(matches!(err, StokesError::MemoryLimit { .. }));
    assert!(newton_solve_u(&p, 4, Grid2D::new(31, 4.0).unwrap(), &PdeParams::default()).is_err());
    assert!(Grid2D::new(2, 1.0).is_err());
}

#[test]
fn interpolated_field_reproduces_nodes() {
    let grid = Grid2D::new(63, 4.0).unwrap();
    let p = ComplexPoly::from_real(&[-1.0, 0.0, 0.0, 1.0]);
    let params = PdeParams { nmesh: 63, ..PdeParams::default() };
    let sol = newton_solve_u(&p, 2, grid, &params).unwrap();
    let f = interpolate_field(&sol.u);
    for (i, j) in [(5, 7), (32, 32), (60, 1)] {
        let (u, _, _) = f.eval(grid.point(i, j)).unwrap();
        assert!((u - sol.u.at(i, j)).abs() < 1e-12);
    }
    assert!(f.eval(Complex64::new(4.5, 0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn richardson_recovers_power_laws(p in 1.0f64..4.0, c in -5.0f64..5.0, limit in -2.0f64..2.0, h in 0.05f64..0.8) {
        // keep the leading term well above cancellation in the differences
        prop_assume!(c.abs() * (h / 4.0).powf(p) > 1e-5);
        let x = |h: f64| Complex64::new(limit + c * h.powf(p), 0.5 * c * h.powf(p));
        let fit = richardson_error([(h, x(h)), (h / 2.0, x(h / 2.0)), (h / 4.0, x(h / 4.0))]).unwrap();
        prop_assert!((fit.exponent.unwrap() - p).abs() < 1e-9);
        prop_assert!((fit.extrapolated - Complex64::new(limit, 0.0)).norm() < 1e-9);
        prop_assert_eq!(fit.accepted, (1.6..=2.4).contains(&fit.exponent.unwrap()));
    }
}

#[test]
fn richardson_rejects_sign_change() {
    let s = [(0.4, Complex64::new(1.0, 0.0)), (0.2, Complex64::new(1.1, 0.0)), (0.1, Complex64::new(1.05, 0.0))];
    assert!(matches!(richardson_error(s), Err(StokesError::DegenerateFit(_))));
}
