//! Periods `Z_gamma` of the Liouville form: stored basepoint values and quadrature.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StokesError};
use crate::poly::ComplexPoly;
use crate::theory::{build_differentials, ChargeVector, PeriodContour, Theory};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn omega() -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI / 3.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodVector {
    pub values: Vec<Complex64>,
    pub params: BTreeMap<String, Complex64>,
}

impl PeriodVector {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values, params: BTreeMap::new() }
    }

    /// Multiply every period by `s`.
    pub fn scaled(&self, s: Complex64) -> Self {
        Self { values: self.values.iter().map(|z| z * s).collect(), params: self.params.clone() }
    }
}

pub fn base_periods(theory: &Theory) -> PeriodVector {
    PeriodVector { values: theory.base_periods.clone(), params: theory.family.basepoint() }
}

pub fn period_of(charge: &ChargeVector, pv: &PeriodVector) -> Result<Complex64> {
    if charge.len() != pv.values.len() {
        return Err(StokesError::DimensionMismatch { expected: pv.values.len(), got: charge.len() });
    }
    Ok(charge.0.iter().zip(&pv.values).map(|(&n, z)| z * n as f64).sum())
}

/// True iff the charge pairs to zero with every lattice vector.
pub fn is_pure_flavor(charge: &ChargeVector, theory: &Theory) -> Result<bool> {
    if charge.len() != theory.lattice_rank {
        return Err(StokesError::DimensionMismatch { expected: theory.lattice_rank, got: charge.len() });
    }
    Ok((0..theory.lattice_rank).all(|i| {
        (0..theory.lattice_rank)
            .map(|j| theory.intersection[i][j] * charge.0[j])
            .sum::<i64>()
            == 0
    }))
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub(crate) fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Integral of a branch-tracked root along the straight path from `mid` to `end`, with
/// `end` an endpoint singularity of type `|z - end|^{1/2}` or `|z - end|^{1/3}`.
///
/// `roots_at(z)` lists the candidate values at `z`; `start` picks the branch at `mid`.
/// The substitution `z = end + (mid - end) tau^6` makes both singularities smooth.
fn tracked_half_segment(
    mid: Complex64,
    end: Complex64,
    start: Complex64,
    panels: usize,
    roots_at: &dyn Fn(Complex64) -> Vec<Complex64>,
) -> Complex64 {
    const POWER: i32 = 6;
    let (gx, gw) = gauss_legendre_unit(20);
    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(panels * gx.len());
    for p in 0..panels {
        let lo = p as f64 / panels as f64;
        let width = 1.0 / panels as f64;
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push((lo + width * x, width * w));
        }
    }
    // walk outward from the midpoint so that branch continuity is well defined
    nodes.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let delta = mid - end;
    let mut prev = start;
    let mut acc = ZERO;
    for (tau, wt) in nodes {
        let z = end + delta * tau.powi(POWER);
        let dz = delta * (POWER as f64) * tau.powi(POWER - 1);
        let cands = roots_at(z);
        let pn = prev / prev.norm().max(f64::MIN_POSITIVE);
        let val = cands
            .into_iter()
            .min_by(|a, b| {
                let da = (a / a.norm().max(f64::MIN_POSITIVE) - pn).norm();
                let db = (b / b.norm().max(f64::MIN_POSITIVE) - pn).norm();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        if val.norm() > 0.0 {
            prev = val;
        }
        acc += val * dz * wt;
    }
    // integral from mid to end is minus the integral in tau from 0 to 1
    -acc
}

/// Doubles panel counts until two successive values agree to `1e-11` (relative to the value).
fn converge(f: impl Fn(usize) -> Complex64) -> Complex64 {
    let mut panels = 2;
    let mut prev = f(panels);
    loop {
        panels *= 2;
        let cur = f(panels);
        if (cur - prev).norm() <= 1e-11 * cur.norm().max(1.0) || panels >= 1024 {
            return cur;
        }
        prev = cur;
    }
}

fn check_open_segment(p: &ComplexPoly, a: Complex64, b: Complex64) -> Result<()> {
    let len = (b - a).norm();
    for r in p.roots() {
        if (r - a).norm() < 1e-8 * len.max(1.0) || (r - b).norm() < 1e-8 * len.max(1.0) {
            continue;
        }
        let t = ((r - a) * (b - a).conj()).re / (len * len);
        if (0.0..=1.0).contains(&t) && (a + (b - a) * t - r).norm() < 1e-9 * len.max(1.0) {
            return Err(StokesError::BranchAmbiguity(format!("root {r} lies on the segment")));
        }
    }
    Ok(())
}

fn nearest_root(roots: &[Complex64], target: Complex64) -> Complex64 {
    *roots
        .iter()
        .min_by(|a, b| (*a - target).norm().partial_cmp(&(*b - target).norm()).unwrap())
        .expect("polynomial has roots")
}

fn is_simple_root(p: &ComplexPoly, z: Complex64) -> bool {
    let scale = p.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    p.derivative().eval(z).norm() > 1e-8 * scale
}

/// `2 int_{za}^{zb} sqrt(-P2) dz` on the straight segment, branch fixed at the midpoint by
/// `branch` times the principal root.
pub fn numeric_period_n2(p2: &ComplexPoly, za: Complex64, zb: Complex64, branch: f64) -> Result<Complex64> {
    for z in [za, zb] {
        if p2.eval(z).norm() > 1e-8 * p2.leading().norm().max(1.0) || !is_simple_root(p2, z) {
            return Err(StokesError::BranchAmbiguity(format!("{z} is not a simple root of P2")));
        }
    }
    check_open_segment(p2, za, zb)?;
    let mid = (za + zb) * 0.5;
    let start = (-p2.eval(mid)).sqrt() * branch;
    if start.norm() == 0.0 {
        return Err(StokesError::BranchAmbiguity("P2 vanishes at the midpoint".into()));
    }
    let roots_at = |z: Complex64| {
        let s = (-p2.eval(z)).sqrt();
        vec![s, -s]
    };
    let half = |end, panels| tracked_half_segment(mid, end, start, panels, &roots_at);
    Ok(converge(|n| (half(zb, n) - half(za, n)) * 2.0))
}

/// Roots of `y^3 + p y + q = 0`.
pub fn depressed_cubic_roots(p: Complex64, q: Complex64) -> [Complex64; 3] {
    let w = omega();
    if p == ZERO {
        let c = (-q).powf(1.0 / 3.0);
        return [c, c * w, c * w * w];
    }
    let d0 = -3.0 * p;
    let d1 = 27.0 * q;
    let disc = (d1 * d1 - 4.0 * d0 * d0 * d0).sqrt();
    let c_plus = ((d1 + disc) * 0.5).powf(1.0 / 3.0);
    let c_minus = ((d1 - disc) * 0.5).powf(1.0 / 3.0);
    let c = if c_plus.norm() >= c_minus.norm() { c_plus } else { c_minus };
    let mut out = [ZERO; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let ck = c * w.powi(k as i32);
        let mut y = if ck.norm() == 0.0 { ZERO } else { -(ck + d0 / ck) / 3.0 };
        for _ in 0..2 {
            let f = y * y * y + p * y + q;
            let df = 3.0 * y * y + p;
            if df.norm() > 1e-300 {
                let step = f / df;
                if step.is_finite() {
                    y -= step;
                }
            }
        }
        *slot = y;
    }
    out
}

/// Cyclic figure-eight period `sheet_factor * int_b^a (-P3)^{1/3} dz` with
/// `sheet_factor = w^sheet (1 - w)`.
fn figure_eight_cyclic(p3: &ComplexPoly, a: Complex64, b: Complex64, sheet: u8) -> Result<Complex64> {
    check_open_segment(p3, a, b)?;
    let mid = (a + b) * 0.5;
    let start = (-p3.eval(mid)).powf(1.0 / 3.0);
    if start.norm() == 0.0 {
        return Err(StokesError::BranchAmbiguity("P3 vanishes at the midpoint".into()));
    }
    let roots_at = |z: Complex64| {
        let w = omega();
        let c = (-p3.eval(z)).powf(1.0 / 3.0);
        vec![c, c * w, c * w * w]
    };
    let half = |end, panels| tracked_half_segment(mid, end, start, panels, &roots_at);
    let integral = converge(|n| half(a, n) - half(b, n));
    let w = omega();
    Ok(w.powi(sheet as i32) * (1.0 - w) * integral)
}

/// Closed-loop integral of `y dz` on the curve `y^3 + P2 y + P3 = 0` with nearest-root sheet tracking.
fn loop_integral(
    p2: &ComplexPoly,
    p3: &ComplexPoly,
    path: &dyn Fn(f64) -> (Complex64, Complex64),
    start_y: Complex64,
    nodes: usize,
) -> Complex64 {
    // trapezoid rule in the loop parameter; spectrally accurate for smooth periodic integrands
    let mut y_prev = start_y;
    let mut acc = ZERO;
    for k in 0..nodes {
        let s = k as f64 / nodes as f64;
        let (z, dz) = path(s);
        let roots = depressed_cubic_roots(p2.eval(z), p3.eval(z));
        let y = nearest_root(&roots, y_prev);
        y_prev = y;
        acc += y * dz;
    }
    acc / nodes as f64
}

fn lemniscate(mid: Complex64, half: Complex64) -> impl Fn(f64) -> (Complex64, Complex64) {
    // lobes around mid +- half, crossing at mid; s in [0, 1)
    move |s: f64| {
        let phi = 2.0 * PI * s;
        let x = 1.6 * phi.sin();
        let y = 0.9 * phi.sin() * phi.cos();
        let dx = 1.6 * phi.cos() * 2.0 * PI;
        let dy = 0.9 * (2.0 * phi).cos() * 2.0 * PI;
        (mid + half * Complex64::new(x, y), half * Complex64::new(dx, dy))
    }
}

fn circle(radius: f64) -> impl Fn(f64) -> (Complex64, Complex64) {
    move |s: f64| {
        let z = Complex64::from_polar(radius, 2.0 * PI * s);
        (z, z * Complex64::new(0.0, 2.0 * PI))
    }
}

fn converge_loop(f: impl Fn(usize) -> Complex64) -> Complex64 {
    let mut n = 256;
    let mut prev = f(n);
    loop {
        n *= 2;
        let cur = f(n);
        if (cur - prev).norm() <= 1e-11 * cur.norm().max(1.0) || n >= 1 << 16 {
            return cur;
        }
        prev = cur;
    }
}

/// Period of one basis contour for an `N = 3` tuple `(P2, P3)`.
///
/// For cyclic tuples (`P2 = 0`) figure-eight periods reduce to a straight-segment integral.
/// Otherwise the figure eight is realized as a closed lemniscate whose starting sheet and
/// orientation are calibrated against the cyclic formula for `P3` alone.
pub fn numeric_contour_period_n3(p2: &ComplexPoly, p3: &ComplexPoly, contour: &PeriodContour) -> Result<Complex64> {
    let roots = p3.roots();
    let w = omega();
    match *contour {
        PeriodContour::FigureEight { a, b, sheet, sign } => {
            let ra = nearest_root(&roots, a);
            let rb = nearest_root(&roots, b);
            let cyclic = figure_eight_cyclic(p3, ra, rb, sheet)? * sign;
            if p2.is_zero() {
                return Ok(cyclic);
            }
            let mid = (ra + rb) * 0.5;
            let half = (ra - rb) * 0.5;
            let path = lemniscate(mid, half);
            let zero = ComplexPoly::zero();
            let base = (-p3.eval(mid)).powf(1.0 / 3.0);
            let mut best: Option<(f64, Complex64, f64)> = None;
            for k in 0..3 {
                let y0 = base * w.powi(k);
                let v = converge_loop(|n| loop_integral(&zero, p3, &path, y0, n));
                for orient in [1.0, -1.0] {
                    let err = (v * orient - cyclic).norm();
                    if best.is_none_or(|(e, _, _)| err < e) {
                        best = Some((err, y0, orient));
                    }
                }
            }
            let (err, y0, orient) = best.unwrap();
            if err > 1e-6 * cyclic.norm().max(1.0) {
                return Err(StokesError::BranchAmbiguity(
                    "lemniscate contour does not reproduce the cyclic period".into(),
                ));
            }
            let mid_roots = depressed_cubic_roots(p2.eval(mid), p3.eval(mid));
            let start = nearest_root(&mid_roots, y0);
            Ok(orient * converge_loop(|n| loop_integral(p2, p3, &path, start, n)))
        }
        PeriodContour::CircleAtInfinity { sheet, sign } => {
            let radius = 2.0 * roots.iter().map(|r| r.norm()).fold(0.0, f64::max) + 1.0;
            let z0 = Complex64::new(radius, 0.0);
            let asym = (-p3.leading()).powf(1.0 / 3.0) * w.powi(sheet as i32) * z0;
            let start = nearest_root(&depressed_cubic_roots(p2.eval(z0), p3.eval(z0)), asym);
            let path = circle(radius);
            Ok(sign * converge_loop(|n| loop_integral(p2, p3, &path, start, n)))
        }
        PeriodContour::Segment { .. } => Err(StokesError::BranchAmbiguity(
            "segment contours describe rank-2 periods".into(),
        )),
    }
}

/// Period of `charge` for the `N = 3` tuple, combining the theory's basis contours linearly.
pub fn numeric_period_n3(p2: &ComplexPoly, p3: &ComplexPoly, charge: &ChargeVector, theory: &Theory) -> Result<Complex64> {
    if charge.len() != theory.lattice_rank {
        return Err(StokesError::DimensionMismatch { expected: theory.lattice_rank, got: charge.len() });
    }
    let mut total = ZERO;
    for (n, contour) in charge.0.iter().zip(&theory.contours) {
        if *n != 0 {
            total += numeric_contour_period_n3(p2, p3, contour)? * *n as f64;
        }
    }
    Ok(total)
}

/// Basis periods of the family at `params`, by quadrature along the stored contours.
pub fn numeric_periods(theory: &Theory, params: &BTreeMap<String, Complex64>) -> Result<PeriodVector> {
    let w = build_differentials(theory, params)?;
    let values = if theory.rank == 2 {
        let roots = w.p2.roots();
        theory
            .contours
            .iter()
            .map(|c| match *c {
                PeriodContour::Segment { from, to, sign } => {
                    numeric_period_n2(&w.p2, nearest_root(&roots, from), nearest_root(&roots, to), sign)
                }
                _ => Err(StokesError::BranchAmbiguity("rank-2 theory with rank-3 contour".into())),
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        theory
            .contours
            .iter()
            .map(|c| numeric_contour_period_n3(&w.p2, &w.p3, c))
            .collect::<Result<Vec<_>>>()?
    };
    let mut all = theory.family.basepoint();
    all.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
    Ok(PeriodVector { values, params: all })
}

/// A1A2 periods at `lambda = 0`: `Z(c) = Z(1) c^{5/6}` on the principal branch.
pub fn a1a2_periods_at_c(theory: &Theory, c: Complex64) -> Result<PeriodVector> {
    if c == ZERO {
        return Err(StokesError::ZeroC);
    }
    let mut pv = base_periods(theory).scaled(c.powf(5.0 / 6.0));
    pv.params.insert("c".into(), c);
    Ok(pv)
}
