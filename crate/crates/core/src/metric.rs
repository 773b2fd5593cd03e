//! Kähler metric `g(c) |dc|^2` on the A1A2 family `P = z^3 - c`.
//!
//! Three routes: the `L^2` norm of the tangent Higgs field from a direct PDE solve, finite
//! differences of Darboux coordinates from the integral equations, and the semiflat closed form.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StokesError};
use crate::ieq::{solve_fixed_point, IeqParams, Mode, SignConvention};
use crate::pde::{newton_solve_u, EulerSolver, FieldGrid, FieldKind, Grid2D, PdeMethod, PdeParams};
use crate::periods::{a1a2_periods_at_c, gauss_legendre_unit};
use crate::poly::ComplexPoly;
use crate::theory::{a1a2_modulus, get_theory, TheoryName};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricSample {
    pub c: Complex64,
    pub g_de: Option<f64>,
    pub g_ieq: Option<f64>,
    pub g_sf: f64,
    pub i_in: Option<f64>,
    pub i_out: Option<f64>,
    pub eps: f64,
    pub de_error: Option<String>,
    pub ieq_error: Option<String>,
}

/// All three metric values at `c`; a failure of one route is recorded without blanking the others.
pub fn metric_sample(c: Complex64, eps: f64, ieq: &IeqParams, pde: Option<&MetricPdeParams>) -> Result<MetricSample> {
    let g_sf = semiflat_metric(c)?;
    let mut out = MetricSample { c, g_de: None, g_ieq: None, g_sf, i_in: None, i_out: None, eps, de_error: None, ieq_error: None };
    match ieq_metric(c, eps, ieq) {
        Ok(m) => out.g_ieq = Some(m.g),
        Err(e) => out.ieq_error = Some(e.to_string()),
    }
    if let Some(pde) = pde {
        match de_metric(c, pde) {
            Ok(m) => {
                out.g_de = Some(m.g);
                out.i_in = Some(m.integral.i_in);
                out.i_out = Some(m.integral.i_out);
            }
            Err(e) => out.de_error = Some(e.to_string()),
        }
    }
    Ok(out)
}

/// Settings of the direct computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricPdeParams {
    pub rmax: f64,
    pub pde: PdeParams,
}

impl Default for MetricPdeParams {
    fn default() -> Self {
        Self {
            rmax: 10.0,
            pde: PdeParams { method: PdeMethod::Euler, nmesh: 1400, thresh: 5e-11, ..PdeParams::default() },
        }
    }
}

/// `z^3 - c`
pub fn a1a2_family_poly(c: Complex64) -> ComplexPoly {
    ComplexPoly::new(vec![-c, ZERO, ZERO, Complex64::new(1.0, 0.0)])
}

fn sample<F: Fn(Complex64) -> Complex64>(grid: Grid2D, f: F) -> Vec<Complex64> {
    let side = grid.side();
    let mut out = vec![ZERO; side * side];
    for i in 0..side {
        for j in 0..side {
            out[grid.index(i, j)] = f(grid.point(i, j));
        }
    }
    out
}

/// Solves `(Lap_h - kappa) F = source` for complex `F` with `F = boundary` on the grid edge.
///
/// `boundary` is read only on edge nodes. Real and imaginary parts share one factorization.
pub fn solve_dirichlet_helmholtz(
    grid: Grid2D,
    kappa: &[f64],
    source: &[Complex64],
    boundary: &[Complex64],
    cap: usize,
) -> Result<Vec<Complex64>> {
    let side = grid.side();
    let inv = 1.0 / (grid.spacing() * grid.spacing());
    let mut values = vec![ZERO; side * side];
    let mut rhs_re = vec![0.0; side * side];
    let mut rhs_im = vec![0.0; side * side];
    for i in 0..side {
        for j in 0..side {
            let k = grid.index(i, j);
            if grid.is_boundary(i, j) {
                values[k] = boundary[k];
                continue;
            }
            let mut s = source[k];
            for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                if grid.is_boundary(a, b) {
                    s -= boundary[grid.index(a, b)] * inv;
                }
            }
            rhs_re[k] = s.re;
            rhs_im[k] = s.im;
        }
    }
    let mut solver = EulerSolver::new(grid, cap)?;
    let parts = solver.solve_many(kappa, &[&rhs_re, &rhs_im])?;
    for i in 1..side - 1 {
        for j in 1..side - 1 {
            let k = grid.index(i, j);
            values[k] = Complex64::new(parts[0][k], parts[1][k]);
        }
    }
    Ok(values)
}

/// Solves `(Lap - 8(e^{2u} + e^{-2u}|P|^2)) F + 8 e^{-2u} conj(P) Pdot = 0` with Dirichlet data
/// `Pdot / (2P)` on the boundary.
pub fn solve_f_variation(u: &FieldGrid, p: &ComplexPoly, p_dot: &ComplexPoly, cap: usize) -> Result<FieldGrid<Complex64>> {
    let grid = u.grid;
    let side = grid.side();
    let pv = sample(grid, |z| p.eval(z));
    let pd = sample(grid, |z| p_dot.eval(z));
    let mut kappa = vec![0.0; side * side];
    let mut source = vec![ZERO; side * side];
    let mut boundary = vec![ZERO; side * side];
    for i in 0..side {
        for j in 0..side {
            let k = grid.index(i, j);
            let e = (2.0 * u.values[k]).exp();
            kappa[k] = 8.0 * (e + pv[k].norm_sqr() / e);
            source[k] = -8.0 * pv[k].conj() * pd[k] / e;
            if grid.is_boundary(i, j) && pd[k] != ZERO {
                if pv[k] == ZERO {
                    return Err(StokesError::NonFinite("P vanishes on the boundary".into()));
                }
                boundary[k] = pd[k] / (2.0 * pv[k]);
            }
        }
    }
    let values = solve_dirichlet_helmholtz(grid, &kappa, &source, &boundary, cap)?;
    Ok(FieldGrid { grid, kind: FieldKind::F, values })
}

/// `4 e^{-2u} (|Pdot|^2 - Re(F P conj(Pdot)))` at the grid nodes.
pub fn metric_integrand(u: &FieldGrid, f: &FieldGrid<Complex64>, p: &ComplexPoly, p_dot: &ComplexPoly) -> FieldGrid {
    let grid = u.grid;
    let pv = sample(grid, |z| p.eval(z));
    let pd = sample(grid, |z| p_dot.eval(z));
    let values = (0..pv.len())
        .map(|k| 4.0 * (-2.0 * u.values[k]).exp() * (pd[k].norm_sqr() - (f.values[k] * pv[k] * pd[k].conj()).re))
        .collect();
    FieldGrid { grid, kind: FieldKind::Integrand, values }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricIntegral {
    pub i_in: f64,
    pub i_out: f64,
}

impl MetricIntegral {
    pub fn total(&self) -> f64 {
        self.i_in + self.i_out
    }
}

/// Fraction of the square cell `[x, x+h] x [y, y+h]` inside `|z| < r`.
///
/// Cut cells integrate the vertical chord length in `x`, split where it has kinks.
fn disc_fraction(x: f64, y: f64, h: f64, r: f64) -> f64 {
    let corners = [(x, y), (x + h, y), (x, y + h), (x + h, y + h)];
    let near = |a: f64| if a < 0.0 && a + h > 0.0 { 0.0 } else { a.abs().min((a + h).abs()) };
    let inside = corners.iter().filter(|(a, b)| a * a + b * b < r * r).count();
    if inside == 4 {
        return 1.0;
    }
    if inside == 0 && near(x).hypot(near(y)) >= r {
        return 0.0;
    }
    let chord = |t: f64| {
        if t.abs() >= r {
            return 0.0;
        }
        let s = (r * r - t * t).sqrt();
        ((y + h).min(s) - y.max(-s)).max(0.0)
    };
    let mut cuts = vec![x, x + h, -r, r];
    for b in [y, y + h] {
        if b.abs() < r {
            let s = (r * r - b * b).sqrt();
            cuts.extend([-s, s]);
        }
    }
    cuts.retain(|t| *t >= x && *t <= x + h);
    cuts.sort_by(f64::total_cmp);
    let (nodes, weights) = gauss_legendre_unit(12);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        area += len * nodes.iter().zip(&weights).map(|(t, wt)| wt * chord(w[0] + t * len)).sum::<f64>();
    }
    area / (h * h)
}

/// Midpoint sum over the cells of the grid weighted by their area inside `|z| < r`, plus the
/// tail `4 pi / r` of the far-field integrand `2 |z|^{-3}`.
pub fn l2_metric_integral(integrand: &FieldGrid, r: f64) -> MetricIntegral {
    let g = integrand.grid;
    let h = g.spacing();
    let side = g.side();
    let mut i_in = 0.0;
    for i in 0..side - 1 {
        for j in 0..side - 1 {
            let w = disc_fraction(g.coord(i), g.coord(j), h, r);
            if w == 0.0 {
                continue;
            }
            let mid = 0.25 * (integrand.at(i, j) + integrand.at(i + 1, j) + integrand.at(i, j + 1) + integrand.at(i + 1, j + 1));
            i_in += w * mid * h * h;
        }
    }
    MetricIntegral { i_in, i_out: 4.0 * std::f64::consts::PI / r }
}

/// `25 M^2 / (6 sqrt 3) |c|^{-1/3}`
pub fn semiflat_metric(c: Complex64) -> Result<f64> {
    if c == ZERO {
        return Err(StokesError::ZeroC);
    }
    let m = a1a2_modulus();
    Ok(25.0 * m * m / (6.0 * 3f64.sqrt()) * c.norm().powf(-1.0 / 3.0))
}

/// Forward-difference metric from `log y_i` sampled at `c`, `c + eps` and `c + i eps`.
///
/// `logs[k][i]` is `log y_{i+1}` at the `k`-th point. The overall sign makes `g` positive for the
/// orientation of the A1A2 basis.
pub fn metric_from_logs(logs: &[[Complex64; 2]; 3], eps: f64) -> f64 {
    let da = |i: usize| (logs[1][i] - logs[0][i]) / eps;
    let db = |i: usize| (logs[2][i] - logs[0][i]) / eps;
    -(da(0) * db(1) - da(1) * db(0)).re
}

/// Semiflat values `log y_i = 2 Re Z_i(c)` at the three stencil points.
pub fn semiflat_logs(c: Complex64, eps: f64) -> Result<[[Complex64; 2]; 3]> {
    let theory = get_theory(TheoryName::A1A2);
    let mut out = [[ZERO; 2]; 3];
    for (k, pt) in [c, c + eps, c + Complex64::new(0.0, eps)].into_iter().enumerate() {
        let pv = a1a2_periods_at_c(&theory, pt)?;
        for i in 0..2 {
            out[k][i] = Complex64::new(2.0 * pv.values[i].re, 0.0);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IeqMetric {
    pub g: f64,
    pub logs: [[Complex64; 2]; 3],
}

/// Metric from Hitchin-section Darboux coordinates at `R = 1`, `zeta = 1`.
pub fn ieq_metric(c: Complex64, eps: f64, params: &IeqParams) -> Result<IeqMetric> {
    if !(eps > 0.0) {
        return Err(StokesError::BadParameter(format!("finite-difference step must be positive (got {eps})")));
    }
    let theory = get_theory(TheoryName::A1A2);
    let points = [c, c + eps, c + Complex64::new(0.0, eps)];
    let rows: Vec<[Complex64; 2]> = points
        .par_iter()
        .map(|&pt| {
            let pv = a1a2_periods_at_c(&theory, pt)?;
            let sol = solve_fixed_point(&theory, &pv, Mode::Hitchin { r: 1.0 }, params)?.require_converged()?;
            let xs = sol.cluster_at_unit(&theory, SignConvention::Paper)?;
            Ok([xs[0].ln(), xs[1].ln()])
        })
        .collect::<Result<_>>()?;
    let logs = [rows[0], rows[1], rows[2]];
    Ok(IeqMetric { g: metric_from_logs(&logs, eps), logs })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeMetric {
    pub g: f64,
    pub integral: MetricIntegral,
    pub newton_iterations: usize,
    pub residual_norm: f64,
    pub u: FieldGrid,
    pub f: FieldGrid<Complex64>,
}

/// Direct metric: solve for `u` on `[-rmax, rmax]^2`, then `F`, then integrate.
pub fn de_metric(c: Complex64, params: &MetricPdeParams) -> Result<DeMetric> {
    if c == ZERO {
        return Err(StokesError::ZeroC);
    }
    let p = a1a2_family_poly(c);
    let p_dot = ComplexPoly::new(vec![Complex64::new(-1.0, 0.0)]);
    let grid = Grid2D::new(params.pde.nmesh, params.rmax)?;
    let sol = newton_solve_u(&p, 2, grid, &params.pde)?;
    let f = solve_f_variation(&sol.u, &p, &p_dot, params.pde.euler_cap)?;
    let integral = l2_metric_integral(&metric_integrand(&sol.u, &f, &p, &p_dot), params.rmax);
    Ok(DeMetric {
        g: integral.total(),
        integral,
        newton_iterations: sol.newton_iterations,
        residual_norm: sol.residual_norm,
        u: sol.u,
        f,
    })
}

/// `u^sf = log|P| / 2` and `F^sf = Pdot / (2P)` on the grid.
pub fn semiflat_fields(grid: Grid2D, p: &ComplexPoly, p_dot: &ComplexPoly) -> (FieldGrid, FieldGrid<Complex64>) {
    let pv = sample(grid, |z| p.eval(z));
    let pd = sample(grid, |z| p_dot.eval(z));
    let u = pv.iter().map(|v| 0.5 * v.norm().ln()).collect();
    let f = pv.iter().zip(&pd).map(|(v, d)| d / (2.0 * v)).collect();
    (FieldGrid { grid, kind: FieldKind::U, values: u }, FieldGrid { grid, kind: FieldKind::F, values: f })
}

/// Integrand grids `I`, `I^sf` and `I - I^sf`.
pub fn emit_integrand_grids(
    u: &FieldGrid,
    f: &FieldGrid<Complex64>,
    u_sf: &FieldGrid,
    f_sf: &FieldGrid<Complex64>,
    p: &ComplexPoly,
    p_dot: &ComplexPoly,
) -> [FieldGrid; 3] {
    let full = metric_integrand(u, f, p, p_dot);
    let sf = metric_integrand(u_sf, f_sf, p, p_dot);
    let diff = FieldGrid {
        grid: full.grid,
        kind: FieldKind::Integrand,
        values: full.values.iter().zip(&sf.values).map(|(a, b)| a - b).collect(),
    };
    [full, sf, diff]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semiflat_scaling() {
        let g1 = semiflat_metric(Complex64::new(1.0, 0.0)).unwrap();
        let g8 = semiflat_metric(Complex64::new(8.0, 0.0)).unwrap();
        assert!((g1 - 20.4325).abs() < 5e-4, "{g1}");
        assert!((g8 - g1 / 2.0).abs() < 1e-12);
        assert!(semiflat_metric(ZERO).is_err());
    }

    #[test]
    fn disc_fraction_limits() {
        assert_eq!(disc_fraction(0.0, 0.0, 0.1, 1.0), 1.0);
        assert_eq!(disc_fraction(2.0, 2.0, 0.1, 1.0), 0.0);
        let f = disc_fraction(0.95, -0.05, 0.1, 1.0);
        assert!(f > 0.0 && f < 1.0);
    }
}
