use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use stokes_core::ieq::{solve_fixed_point, ConvolutionMethod, IeqParams, Mode, SignConvention};
use stokes_core::ode::OdeParams;
use stokes_core::oper::oper_spectral_coords;
use stokes_core::pde::{newton_solve_u, Grid2D, PdeMethod, PdeParams};
use stokes_core::periods::base_periods;
use stokes_core::theory::{get_theory, TheoryName};
use stokes_core::{Complex64, ComplexPoly};

fn ieq(c: &mut Criterion) {
    let theory = get_theory(TheoryName::A1A2);
    let pv = base_periods(&theory);
    let mut g = c.benchmark_group("ieq");
    g.sample_size(10);
    for method in [ConvolutionMethod::Fourier, ConvolutionMethod::Simps] {
        let steps = if method == ConvolutionMethod::Fourier { 1 << 14 } else { 1 << 10 };
        let params = IeqParams { l: 40.0, steps, tolerance: 1e-12, method, ..IeqParams::default() };
        g.bench_function(format!("a1a2_hitchin_{method:?}_{steps}"), |b| {
            b.iter(|| solve_fixed_point(&theory, &pv, Mode::Hitchin { r: 1.0 }, black_box(&params)).unwrap())
        });
    }
    g.finish();
}

fn pde(c: &mut Criterion) {
    let p = ComplexPoly::from_real(&[-1.0, 0.0, 0.0, 1.0]);
    let grid = Grid2D::new(255, 4.0).unwrap();
    let mut g = c.benchmark_group("pde");
    g.sample_size(10);
    for method in [PdeMethod::Euler, PdeMethod::Fourier] {
        let params = PdeParams { method, nmesh: 255, ..PdeParams::default() };
        g.bench_function(format!("a1a2_{method:?}_255"), |b| b.iter(|| newton_solve_u(&p, 2, grid, black_box(&params)).unwrap()));
    }
    g.finish();
}

fn oper(c: &mut Criterion) {
    let theory = get_theory(TheoryName::A1A2);
    let w = theory.differentials_at_basepoint();
    let mut g = c.benchmark_group("oper");
    g.sample_size(10);
    g.bench_function("a1a2_transport_hbar_1", |b| {
        b.iter(|| {
            oper_spectral_coords(&theory, &w, black_box(Complex64::new(1.0, 0.0)), &OdeParams::default(), SignConvention::Paper)
                .unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, ieq, pde, oper);
criterion_main!(benches);
