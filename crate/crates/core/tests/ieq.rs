use std::time::Instant;

use stokes_core::ieq::{
    solve_fixed_point, symmetric_a1a2_reduction, ConvolutionMethod, IeqParams, Mode, RayGrid, SignConvention,
};
use stokes_core::periods::base_periods;
use stokes_core::theory::{a1a2_modulus, get_theory};
use stokes_core::{Complex64, TheoryName};

#[test]
fn a1a2_hitchin_cluster_fixture() {
    let th = get_theory(TheoryName::A1A2);
    let start = Instant::now();
    let sol = solve_fixed_point(&th, &base_periods(&th), Mode::Hitchin { r: 1.0 }, &IeqParams::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(sol.converged, "{:?}", sol.last_deltas);
    assert!(elapsed < 60.0, "{elapsed}");
    let x = sol.cluster_at_unit(&th, SignConvention::Code).unwrap();
    assert!((x[0] - Complex64::new(-0.006415703123337184, 0.0)).norm() < 1e-12);
    assert!((x[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    let paper = sol.cluster_at_unit(&th, SignConvention::Paper).unwrap();
    assert!((paper[0] + x[0]).norm() < 1e-15);
}

#[test]
fn symmetric_reduction_matches_full_system() {
    let red = symmetric_a1a2_reduction(a1a2_modulus(), RayGrid::new(200.0, 1 << 17), 1e-15, 500);
    assert!((red.cross_ratio - 0.006415703123337184).abs() < 1e-9);
}

#[test]
fn fourier_and_simpson_convolutions_agree() {
    let th = get_theory(TheoryName::A1A2);
    let params = IeqParams { l: 20.0, steps: 1 << 10, tolerance: 1e-13, ..IeqParams::default() };
    let sol = solve_fixed_point(&th, &base_periods(&th), Mode::Hitchin { r: 0.3 }, &params).unwrap();
    let f = stokes_core::ieq::apply_f(&sol, ConvolutionMethod::Fourier).unwrap();
    let s = stokes_core::ieq::apply_f(&sol, ConvolutionMethod::Simps).unwrap();
    let mut d: f64 = 0.0;
    for (a, b) in f.iter().zip(&s) {
        for (x, y) in a.iter().zip(b) {
            d = d.max((x - y).norm());
        }
    }
    assert!(d < 1e-6);
}
