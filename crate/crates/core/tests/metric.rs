use std::f64::consts::PI;

use stokes_core::ieq::IeqParams;
use stokes_core::metric::*;
use stokes_core::pde::{newton_solve_u, FieldGrid, Grid2D, PdeMethod, PdeParams};
use stokes_core::{Complex64, ComplexPoly};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn coarse(nmesh: usize) -> MetricPdeParams {
    let mut p = MetricPdeParams::default();
    p.pde.nmesh = nmesh;
    p
}

fn p_dot() -> ComplexPoly {
    ComplexPoly::new(vec![c64(-1.0, 0.0)])
}

#[test]
fn semiflat_closed_form() {
    let g1 = semiflat_metric(c64(1.0, 0.0)).unwrap();
    assert!((g1 - 20.4325).abs() < 5e-4, "{g1}");
    let g8 = semiflat_metric(c64(8.0, 0.0)).unwrap();
    assert!((g8 - 10.21625).abs() < 5e-4, "{g8}");
    assert!(semiflat_metric(c64(0.0, 0.0)).is_err());
}

#[test]
fn semiflat_values_through_difference_pipeline() {
    let c = c64(1.0, 0.0);
    let g = metric_from_logs(&semiflat_logs(c, 1e-6).unwrap(), 1e-6);
    let exact = semiflat_metric(c).unwrap();
    assert!((g - exact).abs() < 1e-4, "{g} vs {exact}");
}

#[test]
fn bracket_is_antisymmetric() {
    let logs = semiflat_logs(c64(1.3, 0.2), 1e-6).unwrap();
    let swapped = logs.map(|[a, b]| [b, a]);
    let (g, h) = (metric_from_logs(&logs, 1e-6), metric_from_logs(&swapped, 1e-6));
    assert!((g + h).abs() < 1e-12 * g.abs());
}

#[test]
fn tail_closed_form() {
    let grid = Grid2D::new(15, 10.0).unwrap();
    let zero = FieldGrid { grid, kind: stokes_core::pde::FieldKind::Integrand, values: vec![0.0; 17 * 17] };
    let m = l2_metric_integral(&zero, 10.0);
    assert_eq!(m.i_in, 0.0);
    assert!((m.i_out - 4.0 * PI / 10.0).abs() < 1e-15);
    assert!((m.i_out - 1.2566).abs() < 1e-4);
}

#[test]
fn inner_quadrature_area_of_disc() {
    let grid = Grid2D::new(399, 10.0).unwrap();
    let ones = FieldGrid { grid, kind: stokes_core::pde::FieldKind::Integrand, values: vec![1.0; 401 * 401] };
    let m = l2_metric_integral(&ones, 10.0);
    assert!((m.i_in - 100.0 * PI).abs() < 1e-3, "{}", m.i_in);
}

#[test]
fn zero_variation_gives_zero_field() {
    let c = c64(1.0, 0.0);
    let p = a1a2_family_poly(c);
    let grid = Grid2D::new(63, 10.0).unwrap();
    let u = newton_solve_u(&p, 2, grid, &coarse(63).pde).unwrap().u;
    let f = solve_f_variation(&u, &p, &ComplexPoly::zero(), 1400).unwrap();
    assert!(f.values.iter().all(|v| *v == c64(0.0, 0.0)));
}

#[test]
fn helmholtz_manufactured_second_order() {
    let exact = |z: Complex64| c64(z.re.exp() * z.im.sin(), z.re * z.im * z.im);
    let lap = |z: Complex64| c64(0.0, 2.0 * z.re);
    let kap = |z: Complex64| 1.0 + z.re * z.re;
    let mut errs = Vec::new();
    for n in [31, 63, 127] {
        let grid = Grid2D::new(n, 1.0).unwrap();
        let side = grid.side();
        let pts: Vec<Complex64> = (0..side * side).map(|k| grid.point(k / side, k % side)).collect();
        let kappa: Vec<f64> = pts.iter().map(|&z| kap(z)).collect();
        let source: Vec<Complex64> = pts.iter().map(|&z| lap(z) - exact(z) * kap(z)).collect();
        let bnd: Vec<Complex64> = pts.iter().map(|&z| exact(z)).collect();
        let sol = solve_dirichlet_helmholtz(grid, &kappa, &source, &bnd, 1400).unwrap();
        let err = sol.iter().zip(&bnd).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        errs.push(err);
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.8..=2.2).contains(&order), "{errs:?}");
    }
}

#[test]
fn variation_matches_far_field_asymptote() {
    let c = c64(4.0, 0.0);
    let p = a1a2_family_poly(c);
    let pd = p_dot();
    let params = coarse(255);
    let grid = Grid2D::new(255, params.rmax).unwrap();
    let u = newton_solve_u(&p, 2, grid, &params.pde).unwrap().u;
    let f = solve_f_variation(&u, &p, &pd, 1400).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..grid.side() {
        for j in 0..grid.side() {
            let z = grid.point(i, j);
            if z.norm() > 0.95 * grid.r && z.norm() <= grid.r {
                worst = worst.max((f.at(i, j) - pd.eval(z) / (2.0 * p.eval(z))).norm());
            }
        }
    }
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn integrand_far_field_and_semiflat_comparison() {
    let c = c64(1.0, 0.0);
    let p = a1a2_family_poly(c);
    let params = coarse(255);
    let m = de_metric(c, &params).unwrap();
    let one = ComplexPoly::new(vec![c64(1.0, 0.0)]);
    let f_plus = solve_f_variation(&m.u, &p, &one, 1400).unwrap();
    let integrand = metric_integrand(&m.u, &f_plus, &p, &one);
    let (u_sf, f_sf) = semiflat_fields(m.u.grid, &p, &p_dot());
    let [full, sf, diff] = emit_integrand_grids(&m.u, &m.f, &u_sf, &f_sf, &p, &p_dot());
    let g = m.u.grid;
    let mut ring_diff: f64 = 0.0;
    for i in 0..g.side() {
        for j in 0..g.side() {
            let z = g.point(i, j);
            let k = g.index(i, j);
            // semiflat integrand is exactly 2 / |P|
            assert!((sf.values[k] - 2.0 / p.eval(z).norm()).abs() < 1e-12 * sf.values[k].max(1.0));
            assert_eq!(diff.values[k], full.values[k] - sf.values[k]);
            if z.norm() > 0.95 * g.r && z.norm() <= g.r {
                let far = 2.0 * z.norm().powi(-3);
                let rel = (integrand.at(i, j) - far).abs() / far;
                assert!(rel < 0.2, "integrand {} vs {far} at {z}", integrand.at(i, j));
                ring_diff = ring_diff.max(diff.values[k].abs());
            }
        }
    }
    assert!(ring_diff < 1e-2, "{ring_diff}");
    assert!(m.g > 0.0);
}

#[test]
fn grid_dump_round_trip() {
    let c = c64(2.0, 0.5);
    let grid = Grid2D::new(31, 3.0).unwrap();
    let (u_sf, _) = semiflat_fields(grid, &a1a2_family_poly(c), &p_dot());
    let back = FieldGrid::from_bytes(&u_sf.to_bytes()).unwrap();
    assert_eq!(back.grid, u_sf.grid);
    assert_eq!(back.kind, u_sf.kind);
    assert!(back.values.iter().zip(&u_sf.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(FieldGrid::from_bytes(&u_sf.to_bytes()[..100]).is_err());
}

#[test]
fn ieq_metric_depends_only_on_modulus() {
    let params = IeqParams::default();
    let c = c64(1.0, 0.0);
    let rot = c * Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    // forward-difference truncation depends on the step direction and is about 1e-6 at eps = 1e-6
    let a = ieq_metric(c, 1e-7, &params).unwrap().g;
    let b = ieq_metric(rot, 1e-7, &params).unwrap().g;
    assert!(a > 0.0);
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn direct_metric_rotation_within_refinement_error() {
    let c = c64(1.0, 0.0);
    let rot = c * Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    let coarse_g = de_metric(c, &coarse(255)).unwrap().g;
    let fine_g = de_metric(c, &coarse(511)).unwrap().g;
    let fine_rot = de_metric(rot, &coarse(511)).unwrap().g;
    let estimate = (fine_g - coarse_g).abs() / 3.0;
    assert!((fine_g - fine_rot).abs() <= estimate, "{fine_g} {fine_rot} estimate {estimate}");
}

#[test]
fn euler_is_the_metric_default() {
    let p = MetricPdeParams::default();
    assert_eq!(p.pde.method, PdeMethod::Euler);
    assert_eq!((p.rmax, p.pde.nmesh, p.pde.thresh), (10.0, 1400, 5e-11));
    let _ = PdeParams::default();
}
