//! Self-duality equation `Lap u = 4 (e^{k u} - e^{-2u} |P|^2)` on a square, the Hitchin-section
//! connection built from its solution, and Richardson error estimates.
//!
//! `k = 2` for rank 2 and `k = 1` for rank 3. Fields are stored on the full grid including the
//! Dirichlet boundary, row-major with the `x` index first.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Result, StokesError};
use crate::ieq::SignConvention;
use crate::ode::OdeParams;
use crate::oper::{ode_error_estimate, spectral_coords_de, subdominant_vectors, Connection, DeCoordinates, FrameSet};
use crate::poly::ComplexPoly;
use crate::spline::BicubicSpline;
use crate::theory::{
    choose_radius, normalize_quasi_monic_centered, scale_differentials, stokes_ray_directions, DifferentialTuple,
    RadiusKind, Theory,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    /// Interior nodes per axis.
    pub nmesh: usize,
    /// Half-width of the square `[-r, r]^2`.
    pub r: f64,
}

impl Grid2D {
    pub fn new(nmesh: usize, r: f64) -> Result<Self> {
        if nmesh < 3 || !(r > 0.0) {
            return Err(StokesError::BadParameter(format!("grid needs nmesh >= 3 and r > 0 (got {nmesh}, {r})")));
        }
        Ok(Self { nmesh, r })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.r / (self.nmesh + 1) as f64
    }

    /// Nodes per axis including both boundary nodes.
    pub fn side(&self) -> usize {
        self.nmesh + 2
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.r + self.spacing() * i as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.side() + j
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.coord(i), self.coord(j))
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nmesh + 1 || j == self.nmesh + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    U,
    Ux,
    Uy,
    F,
    Residual,
    Integrand,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldGrid<T = f64> {
    pub grid: Grid2D,
    pub kind: FieldKind,
    pub values: Vec<T>,
}

impl<T: Copy> FieldGrid<T> {
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[self.grid.index(i, j)]
    }
}

const GRID_MAGIC: &[u8; 4] = b"SGRD";

impl FieldKind {
    fn code(self) -> u8 {
        match self {
            FieldKind::U => 0,
            FieldKind::Ux => 1,
            FieldKind::Uy => 2,
            FieldKind::F => 3,
            FieldKind::Residual => 4,
            FieldKind::Integrand => 5,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => FieldKind::U,
            1 => FieldKind::Ux,
            2 => FieldKind::Uy,
            3 => FieldKind::F,
            4 => FieldKind::Residual,
            5 => FieldKind::Integrand,
            _ => return None,
        })
    }
}

impl FieldGrid<f64> {
    /// Binary dump: magic, kind byte, `nmesh` as u64, `r` as f64, then the full-grid samples,
    /// all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(21 + 8 * self.values.len());
        out.extend_from_slice(GRID_MAGIC);
        out.push(self.kind.code());
        out.extend_from_slice(&(self.grid.nmesh as u64).to_le_bytes());
        out.extend_from_slice(&self.grid.r.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| StokesError::BadParameter(format!("grid dump: {m}"));
        if bytes.len() < 21 || &bytes[..4] != GRID_MAGIC {
            return Err(bad("missing header"));
        }
        let kind = FieldKind::from_code(bytes[4]).ok_or_else(|| bad("unknown field kind"))?;
        let nmesh = u64::from_le_bytes(bytes[5..13].try_into().unwrap()) as usize;
        let r = f64::from_le_bytes(bytes[13..21].try_into().unwrap());
        let grid = Grid2D::new(nmesh, r)?;
        let count = grid.side() * grid.side();
        if bytes.len() != 21 + 8 * count {
            return Err(bad("length does not match the header"));
        }
        let values = bytes[21..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { grid, kind, values })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdeMethod {
    Euler,
    Fourier,
}

/// Constant shift `C` of the spectral preconditioner `(C - Lap)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HelmholtzShift {
    /// `(sup kappa - inf kappa) / 2`
    HalfRange,
    /// `(sup kappa + inf kappa) / 2`
    Midpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeParams {
    pub method: PdeMethod,
    pub nmesh: usize,
    pub thresh: f64,
    pub shift: HelmholtzShift,
    pub euler_cap: usize,
    pub fourier_cap: usize,
    pub max_newton: usize,
    pub max_inner: usize,
}

impl Default for PdeParams {
    fn default() -> Self {
        Self {
            method: PdeMethod::Fourier,
            nmesh: 1023,
            thresh: 1e-9,
            shift: HelmholtzShift::HalfRange,
            euler_cap: 1400,
            fourier_cap: 8191,
            max_newton: 60,
            max_inner: 5000,
        }
    }
}

/// The nonlinear problem on a fixed grid, with an optional extra source term.
#[derive(Clone, Debug)]
pub struct SelfDuality {
    pub rank: usize,
    pub grid: Grid2D,
    pub abs_p_sq: Vec<f64>,
    pub source: Option<Vec<f64>>,
}

impl SelfDuality {
    pub fn new(p: &ComplexPoly, rank: usize, grid: Grid2D) -> Self {
        let side = grid.side();
        let mut abs_p_sq = vec![0.0; side * side];
        for i in 0..side {
            for j in 0..side {
                abs_p_sq[grid.index(i, j)] = p.eval(grid.point(i, j)).norm_sqr();
            }
        }
        Self { rank, grid, abs_p_sq, source: None }
    }

    pub fn exponent(&self) -> f64 {
        if self.rank == 2 {
            2.0
        } else {
            1.0
        }
    }

    fn rhs(&self, idx: usize, u: f64) -> f64 {
        let k = self.exponent();
        let s = self.source.as_ref().map_or(0.0, |s| s[idx]);
        4.0 * ((k * u).exp() - (-2.0 * u).exp() * self.abs_p_sq[idx]) + s
    }

    fn kappa(&self, idx: usize, u: f64) -> f64 {
        let k = self.exponent();
        4.0 * (k * (k * u).exp() + 2.0 * (-2.0 * u).exp() * self.abs_p_sq[idx])
    }

    /// Five-point residual `Lap_h u - rhs(u)` on interior nodes (zero on the boundary).
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let n = g.side();
        let inv = 1.0 / (g.spacing() * g.spacing());
        let mut res = vec![0.0; n * n];
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let k = g.index(i, j);
                let lap = (u[k + n] + u[k - n] + u[k + 1] + u[k - 1] - 4.0 * u[k]) * inv;
                res[k] = lap - self.rhs(k, u[k]);
            }
        }
        res
    }
}

/// Max norm and discrete `L^2` norm (`sqrt(dx^2 sum r^2)`).
pub fn residual_norms(res: &[f64], grid: Grid2D) -> (f64, f64) {
    let sup = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l2 = (res.iter().map(|v| v * v).sum::<f64>()).sqrt() * grid.spacing();
    (sup, l2)
}

fn method_norm(res: &[f64], grid: Grid2D, method: PdeMethod) -> f64 {
    let (sup, l2) = residual_norms(res, grid);
    match method {
        PdeMethod::Euler => sup,
        PdeMethod::Fourier => l2,
    }
}

/// `u0 = (N-1)/(2N) log(|P|^2 + sigma e^{-|P|^4})` with a mollifier `sigma` supported in `|z| < 0.9 r`.
pub fn model_u0(p: &ComplexPoly, grid: Grid2D, rank: usize) -> FieldGrid {
    let side = grid.side();
    let coef = (rank as f64 - 1.0) / (2.0 * rank as f64);
    let mut values = vec![0.0; side * side];
    for i in 0..side {
        for j in 0..side {
            let z = grid.point(i, j);
            let a = p.eval(z).norm_sqr();
            let rho = z.norm() / (0.9 * grid.r);
            let sigma = if rho < 1.0 { (1.0 - 1.0 / (1.0 - rho * rho)).exp() } else { 0.0 };
            values[grid.index(i, j)] = coef * (a + sigma * (-a * a).exp()).ln();
        }
    }
    FieldGrid { grid, kind: FieldKind::U, values }
}

/// Sparse Cholesky for `(kappa - Lap_h) x = b`, reusing the symbolic factorization.
pub struct EulerSolver {
    grid: Grid2D,
    symbolic: Option<SymbolicLlt<usize>>,
}

impl EulerSolver {
    pub fn new(grid: Grid2D, cap: usize) -> Result<Self> {
        if grid.nmesh > cap {
            return Err(StokesError::MemoryLimit { method: "euler", nmesh: grid.nmesh, cap });
        }
        Ok(Self { grid, symbolic: None })
    }

    /// Solves `(Lap_h - kappa) x = rhs` on the interior; `kappa` and `rhs` are full-grid arrays.
    pub fn solve(&mut self, kappa: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_many(kappa, &[rhs])?.pop().unwrap())
    }

    /// As [`EulerSolver::solve`] for several right-hand sides sharing one factorization.
    pub fn solve_many(&mut self, kappa: &[f64], rhs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let g = self.grid;
        let m = g.nmesh;
        let inv = 1.0 / (g.spacing() * g.spacing());
        let id = |i: usize, j: usize| (i - 1) * m + (j - 1);
        let mut trip = Vec::with_capacity(3 * m * m);
        for i in 1..=m {
            for j in 1..=m {
                let k = id(i, j);
                trip.push(Triplet::new(k, k, kappa[g.index(i, j)] + 4.0 * inv));
                if i < m {
                    trip.push(Triplet::new(id(i + 1, j), k, -inv));
                }
                if j < m {
                    trip.push(Triplet::new(id(i, j + 1), k, -inv));
                }
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(m * m, m * m, &trip)
            .map_err(|e| StokesError::LinearSolve(format!("{e:?}")))?;
        drop(trip);
        if self.symbolic.is_none() {
            self.symbolic = Some(
                SymbolicLlt::try_new(a.symbolic(), Side::Lower).map_err(|e| StokesError::LinearSolve(format!("{e:?}")))?,
            );
        }
        let sym = self.symbolic.clone().unwrap();
        let llt = Llt::try_new_with_symbolic(sym, a.as_ref(), Side::Lower)
            .map_err(|e| StokesError::LinearSolve(format!("{e:?}")))?;
        let b = Mat::<f64>::from_fn(m * m, rhs.len(), |k, c| -rhs[c][g.index(k / m + 1, k % m + 1)]);
        let x = llt.solve(&b);
        Ok((0..rhs.len())
            .map(|c| {
                let mut out = vec![0.0; g.side() * g.side()];
                for i in 1..=m {
                    for j in 1..=m {
                        out[g.index(i, j)] = x[(id(i, j), c)];
                    }
                }
                out
            })
            .collect())
    }
}

/// Linear Newton step with the sparse direct solver: `(Lap_h - kappa) dv = -res`.
pub fn linear_step_euler(solver: &mut EulerSolver, kappa: &[f64], res: &[f64]) -> Result<Vec<f64>> {
    let neg: Vec<f64> = res.iter().map(|v| -v).collect();
    solver.solve(kappa, &neg)
}

/// Two-dimensional DST-I on `n x n` interior arrays via complex FFTs of length `2(n+1)`.
pub struct SineTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SineTransform {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Self { n, fft }
    }

    /// Unnormalized DST-I of two real sequences at once.
    fn pair(&self, a: &mut [f64], b: &mut [f64], buf: &mut [Complex64]) {
        let n = self.n;
        buf[0] = Complex64::new(0.0, 0.0);
        buf[n + 1] = Complex64::new(0.0, 0.0);
        for j in 1..=n {
            let v = Complex64::new(a[j - 1], b[j - 1]);
            buf[j] = v;
            buf[2 * (n + 1) - j] = -v;
        }
        self.fft.process(buf);
        for k in 1..=n {
            a[k - 1] = -buf[k].im / 2.0;
            b[k - 1] = buf[k].re / 2.0;
        }
    }

    fn rows(&self, data: &mut [f64]) {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * (n + 1)];
        let mut spare = vec![0.0; n];
        let mut chunks = data.chunks_mut(n);
        while let Some(a) = chunks.next() {
            match chunks.next() {
                Some(b) => self.pair(a, b, &mut buf),
                None => self.pair(a, &mut spare, &mut buf),
            }
        }
    }

    fn transpose(&self, data: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                data.swap(i * n + j, j * n + i);
            }
        }
    }

    /// In-place 2D DST-I; applying it twice multiplies by `((n+1)/2)^2`.
    pub fn forward(&self, data: &mut [f64]) {
        self.rows(data);
        self.transpose(data);
        self.rows(data);
        self.transpose(data);
    }

    /// Eigenvalue of the five-point Laplacian for sine mode `(p, q)`, 1-based.
    pub fn laplacian_symbol(&self, p: usize, q: usize, dx: f64) -> f64 {
        let s = |m: usize| (m as f64 * std::f64::consts::PI / (2.0 * (self.n + 1) as f64)).sin().powi(2);
        -4.0 / (dx * dx) * (s(p) + s(q))
    }

    /// Solves `(Lap_h - c) x = f` with zero Dirichlet data; `f` is interior-only, row-major.
    pub fn helmholtz(&self, f: &mut [f64], c: f64, dx: f64) -> Result<()> {
        let n = self.n;
        self.forward(f);
        let norm = (2.0 / (n + 1) as f64).powi(2);
        for p in 0..n {
            for q in 0..n {
                let sym = self.laplacian_symbol(p + 1, q + 1, dx) - c;
                if sym == 0.0 {
                    return Err(StokesError::LinearSolve("zero Helmholtz symbol".into()));
                }
                f[p * n + q] *= norm / sym;
            }
        }
        self.forward(f);
        Ok(())
    }
}

fn is_dst_size(n: usize) -> bool {
    (n + 1).is_power_of_two()
}

/// Linear Newton step by conjugate gradients on `(kappa - Lap_h) dv = res`, preconditioned by
/// the constant-coefficient operator `(C - Lap_h)` inverted with the sine transform.
/// Returns the increment and the number of inner iterations.
pub fn linear_step_fourier(
    dst: &SineTransform,
    grid: Grid2D,
    kappa: &[f64],
    res: &[f64],
    shift: HelmholtzShift,
    rel_tol: f64,
    max_inner: usize,
) -> Result<(Vec<f64>, usize)> {
    let m = grid.nmesh;
    let side = grid.side();
    let dx = grid.spacing();
    let inv = 1.0 / (dx * dx);
    let interior = |i: usize, j: usize| (i + 1) * side + (j + 1);
    let kap: Vec<f64> = (0..m * m).map(|k| kappa[interior(k / m, k % m)]).collect();
    let (lo, hi) = kap.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let c = match shift {
        HelmholtzShift::HalfRange => 0.5 * (hi - lo),
        HelmholtzShift::Midpoint => 0.5 * (hi + lo),
    };
    let apply = |x: &[f64], out: &mut [f64]| {
        for i in 0..m {
            for j in 0..m {
                let k = i * m + j;
                let mut nb = 0.0;
                if i > 0 {
                    nb += x[k - m];
                }
                if i + 1 < m {
                    nb += x[k + m];
                }
                if j > 0 {
                    nb += x[k - 1];
                }
                if j + 1 < m {
                    nb += x[k + 1];
                }
                out[k] = kap[k] * x[k] - (nb - 4.0 * x[k]) * inv;
            }
        }
    };
    let precondition = |r: &[f64], z: &mut [f64]| -> Result<()> {
        z.copy_from_slice(r);
        dst.helmholtz(z, c, dx)?;
        for v in z.iter_mut() {
            *v = -*v;
        }
        Ok(())
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let b: Vec<f64> = (0..m * m).map(|k| res[interior(k / m, k % m)]).collect();
    let bnorm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; m * m];
    let mut iters = 0;
    if bnorm > 0.0 {
        let mut r = b.clone();
        let mut z = vec![0.0; m * m];
        precondition(&r, &mut z)?;
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; m * m];
        while iters < max_inner {
            iters += 1;
            apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for k in 0..m * m {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            if dot(&r, &r).sqrt() <= rel_tol * bnorm {
                break;
            }
            precondition(&r, &mut z)?;
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..m * m {
                p[k] = z[k] + beta * p[k];
            }
        }
    }
    // (kappa - Lap) x = res  is  (Lap - kappa) dv = -res
    let mut out = vec![0.0; side * side];
    for k in 0..m * m {
        out[interior(k / m, k % m)] = x[k];
    }
    Ok((out, iters))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PdeSolution {
    pub u: FieldGrid,
    pub newton_iterations: usize,
    pub inner_iterations: usize,
    /// Final residual in the method's norm.
    pub residual_norm: f64,
    pub residual_history: Vec<f64>,
}

/// Newton iteration from `start`, whose boundary values are kept as Dirichlet data.
pub fn newton_solve(problem: &SelfDuality, start: &FieldGrid, params: &PdeParams) -> Result<PdeSolution> {
    let grid = problem.grid;
    let mut euler = None;
    let mut dst = None;
    match params.method {
        PdeMethod::Euler => euler = Some(EulerSolver::new(grid, params.euler_cap)?),
        PdeMethod::Fourier => {
            if grid.nmesh > params.fourier_cap {
                return Err(StokesError::MemoryLimit { method: "fourier", nmesh: grid.nmesh, cap: params.fourier_cap });
            }
            if !is_dst_size(grid.nmesh) {
                return Err(StokesError::GridShape(grid.nmesh));
            }
            dst = Some(SineTransform::new(grid.nmesh));
        }
    }
    let mut u = start.values.clone();
    let mut res = problem.residual(&u);
    let mut norm = method_norm(&res, grid, params.method);
    let mut history = vec![norm];
    let mut increases = 0;
    let mut inner_total = 0;
    let mut it = 0;
    while norm >= params.thresh {
        if !norm.is_finite() {
            return Err(StokesError::NonFinite("PDE residual".into()));
        }
        if it >= params.max_newton {
            return Err(StokesError::NotConverged { iterations: it, last_deltas: history.iter().rev().take(5).copied().collect() });
        }
        it += 1;
        let kappa: Vec<f64> = u.iter().enumerate().map(|(k, &v)| problem.kappa(k, v)).collect();
        let du = match params.method {
            PdeMethod::Euler => linear_step_euler(euler.as_mut().unwrap(), &kappa, &res)?,
            PdeMethod::Fourier => {
                let rel = norm.clamp(1e-12, 1e-2);
                let (du, k) = linear_step_fourier(dst.as_ref().unwrap(), grid, &kappa, &res, params.shift, rel, params.max_inner)?;
                inner_total += k;
                du
            }
        };
        // halving line search on the residual
        let mut step = 1.0;
        let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        for _ in 0..10 {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + step * b).collect();
            let tres = problem.residual(&trial);
            let tnorm = method_norm(&tres, grid, params.method);
            let better = best.as_ref().is_none_or(|(b, _, _)| tnorm < *b);
            if tnorm.is_finite() && better {
                best = Some((tnorm, trial, tres));
            }
            if tnorm.is_finite() && tnorm < norm {
                break;
            }
            step *= 0.5;
        }
        let Some((tnorm, trial, tres)) = best else {
            return Err(StokesError::NonFinite("Newton update".into()));
        };
        increases = if tnorm > norm { increases + 1 } else { 0 };
        if increases >= 10 {
            return Err(StokesError::Divergence(format!("residual rose for 10 consecutive steps (now {tnorm:e})")));
        }
        u = trial;
        res = tres;
        norm = tnorm;
        history.push(norm);
    }
    Ok(PdeSolution {
        u: FieldGrid { grid, kind: FieldKind::U, values: u },
        newton_iterations: it,
        inner_iterations: inner_total,
        residual_norm: norm,
        residual_history: history,
    })
}

/// Solves the self-duality equation for `P` with `u = u0 + v`, `v = 0` on the boundary.
pub fn newton_solve_u(p: &ComplexPoly, rank: usize, grid: Grid2D, params: &PdeParams) -> Result<PdeSolution> {
    if rank != 2 && rank != 3 {
        return Err(StokesError::DegreeViolation(format!("rank {rank} is not supported")));
    }
    let problem = SelfDuality::new(p, rank, grid);
    let u0 = model_u0(p, grid, rank);
    newton_solve(&problem, &u0, params)
}

/// Central differences in the interior and second-order one-sided differences on the edges.
pub fn partials(u: &FieldGrid) -> (FieldGrid, FieldGrid) {
    let g = u.grid;
    let n = g.side();
    let h = g.spacing();
    let d = |f: &dyn Fn(usize) -> f64, k: usize| {
        if k == 0 {
            (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
        } else if k == n - 1 {
            (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
        } else {
            (f(k + 1) - f(k - 1)) / (2.0 * h)
        }
    };
    let mut ux = vec![0.0; n * n];
    let mut uy = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            ux[g.index(i, j)] = d(&|a| u.values[g.index(a, j)], i);
            uy[g.index(i, j)] = d(&|b| u.values[g.index(i, b)], j);
        }
    }
    (
        FieldGrid { grid: g, kind: FieldKind::Ux, values: ux },
        FieldGrid { grid: g, kind: FieldKind::Uy, values: uy },
    )
}

pub fn spline_of(field: &FieldGrid) -> BicubicSpline {
    let g = field.grid;
    BicubicSpline::new(-g.r, g.spacing(), g.side(), field.values.clone())
}

/// Continuous `u`, `u_x`, `u_y` on the grid square.
#[derive(Clone, Debug)]
pub struct UField {
    pub u: BicubicSpline,
    pub ux: BicubicSpline,
    pub uy: BicubicSpline,
}

impl UField {
    pub fn eval(&self, z: Complex64) -> Result<(f64, f64, f64)> {
        Ok((self.u.eval(z.re, z.im)?, self.ux.eval(z.re, z.im)?, self.uy.eval(z.re, z.im)?))
    }
}

pub fn interpolate_field(u: &FieldGrid) -> UField {
    let (ux, uy) = partials(u);
    UField { u: spline_of(u), ux: spline_of(&ux), uy: spline_of(&uy) }
}

/// Flat connection of the Hitchin section in the unitary frame of the harmonic metric.
///
/// With `du = (u_x - i u_y)/2` and `P` the top differential:
/// rank 2: `A_z = [[-du/2, -P e^{-u}/zeta], [e^u/zeta, du/2]]`,
/// `A_zbar = [[conj(du)/2, zeta e^u], [-zeta conj(P) e^{-u}, -conj(du)/2]]`;
/// rank 3: `A_z = diag(-du/2, 0, du/2) + zeta^{-1} [[0, 0, -P e^{-u}], [e^{u/2}, 0, 0], [0, e^{u/2}, 0]]`,
/// `A_zbar = diag(conj(du)/2, 0, -conj(du)/2) + zeta [[0, e^{u/2}, 0], [0, 0, e^{u/2}], [-conj(P) e^{-u}, 0, 0]]`.
pub struct HitchinConnection {
    pub rank: usize,
    pub p: ComplexPoly,
    pub zeta: Complex64,
    pub field: UField,
}

impl HitchinConnection {
    /// Returns `(A_z, A_zbar)` row-major.
    pub fn components(&self, z: Complex64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let (u, ux, uy) = self.field.eval(z)?;
        let du = Complex64::new(ux, -uy) * 0.5;
        let dbu = du.conj();
        let p = self.p.eval(z);
        let zi = 1.0 / self.zeta;
        let zt = self.zeta;
        let o = Complex64::new(0.0, 0.0);
        let em = (-u).exp();
        if self.rank == 2 {
            let ep = u.exp();
            Ok((
                vec![-du / 2.0, -p * em * zi, zi * ep, du / 2.0],
                vec![dbu / 2.0, zt * ep, -zt * p.conj() * em, -dbu / 2.0],
            ))
        } else {
            let eh = (0.5 * u).exp();
            Ok((
                vec![-du / 2.0, o, -p * em * zi, zi * eh, o, o, o, zi * eh, du / 2.0],
                vec![dbu / 2.0, zt * eh, o, o, o, zt * eh, -zt * p.conj() * em, o, -dbu / 2.0],
            ))
        }
    }
}

impl Connection for HitchinConnection {
    fn rank(&self) -> usize {
        self.rank
    }

    fn coefficient(&self, z: Complex64, dz: Complex64, out: &mut [Complex64]) {
        match self.components(z) {
            Ok((az, azb)) => {
                for k in 0..out.len() {
                    out[k] = az[k] * dz + azb[k] * dz.conj();
                }
            }
            Err(_) => out.fill(Complex64::new(f64::NAN, f64::NAN)),
        }
    }
}

pub fn hitchin_connection_matrix(p: &ComplexPoly, rank: usize, u: &FieldGrid, zeta: Complex64) -> Result<HitchinConnection> {
    if zeta == Complex64::new(0.0, 0.0) {
        return Err(StokesError::ZeroSpectralParameter);
    }
    Ok(HitchinConnection { rank, p: p.clone(), zeta, field: interpolate_field(u) })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HitchinResult {
    pub coords: DeCoordinates,
    pub ode_error_estimate: Vec<f64>,
    pub frames: FrameSet,
    pub grid: Grid2D,
    pub pde: PdeStats,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PdeStats {
    pub newton_iterations: usize,
    pub inner_iterations: usize,
    pub residual_norm: f64,
}

/// Normalized top differential of `R w` and the grid half-width used for it.
pub fn hitchin_setup(w: &DifferentialTuple, r_param: f64) -> Result<(DifferentialTuple, f64)> {
    if !(r_param > 0.0) {
        return Err(StokesError::BadParameter("R must be positive".into()));
    }
    let scaled = scale_differentials(w, Complex64::new(r_param, 0.0))?;
    let (normalized, _) = normalize_quasi_monic_centered(&scaled);
    let half_width = choose_radius(&normalized, RadiusKind::Hitchin);
    Ok((normalized, half_width))
}

/// Hitchin-section coordinates at `(R, zeta)` from a PDE solve on an `nmesh` grid.
pub fn hitchin_spectral_coords_de(
    theory: &Theory,
    w: &DifferentialTuple,
    r_param: f64,
    zeta: Complex64,
    pde: &PdeParams,
    ode: &OdeParams,
    convention: SignConvention,
) -> Result<HitchinResult> {
    if w.rank == 3 && !w.p2.is_zero() {
        return Err(StokesError::DegreeViolation("the PDE handles only P_N with lower differentials zero".into()));
    }
    let directions = stokes_ray_directions(w, zeta)?;
    let (normalized, half_width) = hitchin_setup(w, r_param)?;
    let grid = Grid2D::new(pde.nmesh, half_width)?;
    let top = normalized.top().clone();
    let sol = newton_solve_u(&top, w.rank, grid, pde)?;
    let conn = hitchin_connection_matrix(&top, w.rank, &sol.u, zeta)?;
    let frames = subdominant_vectors(&conn, &directions, 0.98 * half_width, ode)?;
    let coords = spectral_coords_de(&frames, theory, convention)?;
    let ode_error_estimate = ode_error_estimate(&frames, theory)?;
    Ok(HitchinResult {
        coords,
        ode_error_estimate,
        frames,
        grid,
        pde: PdeStats {
            newton_iterations: sol.newton_iterations,
            inner_iterations: sol.inner_iterations,
            residual_norm: sol.residual_norm,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RichardsonResult {
    /// `|X_finest - X_extrapolated|`.
    pub estimate: f64,
    /// Fitted exponent, absent when all values coincide.
    pub exponent: Option<f64>,
    pub extrapolated: Complex64,
    pub accepted: bool,
}

/// Fits `X(h) = X* + c h^p` through three `(spacing, value)` samples.
pub fn richardson_error(samples: [(f64, Complex64); 3]) -> Result<RichardsonResult> {
    let mut s = samples;
    s.sort_by(|a, b| b.0.total_cmp(&a.0));
    let [(h1, x1), (h2, x2), (h3, x3)] = s;
    if !(h1 > h2 && h2 > h3 && h3 > 0.0) {
        return Err(StokesError::DegenerateFit("spacings must be distinct and positive".into()));
    }
    let d1 = x1 - x2;
    let d2 = x2 - x3;
    if d1.norm() == 0.0 && d2.norm() == 0.0 {
        return Ok(RichardsonResult { estimate: 0.0, exponent: None, extrapolated: x3, accepted: true });
    }
    if (d1 * d2.conj()).re <= 0.0 {
        return Err(StokesError::DegenerateFit("successive differences change sign".into()));
    }
    let rho = d1.norm() / d2.norm();
    let g = |p: f64| (h1.powf(p) - h2.powf(p)) / (h2.powf(p) - h3.powf(p)) - rho;
    let (mut lo, mut hi) = (1e-3, 30.0);
    if g(lo) * g(hi) > 0.0 {
        return Err(StokesError::DegenerateFit(format!("no power law matches the difference ratio {rho}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let c = d2 / (h2.powf(p) - h3.powf(p));
    let extrapolated = x3 - c * h3.powf(p);
    Ok(RichardsonResult {
        estimate: (x3 - extrapolated).norm(),
        exponent: Some(p),
        extrapolated,
        accepted: (1.6..=2.4).contains(&p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_exact_on_quadratics() {
        let g = Grid2D::new(7, 1.0).unwrap();
        let problem = SelfDuality { rank: 2, grid: g, abs_p_sq: vec![1.0; 81], source: Some(vec![0.0; 81]) };
        let u: Vec<f64> = (0..81).map(|k| g.coord(k / 9).powi(2)).collect();
        let res = problem.residual(&u);
        // residual = 2 - 4 (e^{2u} - e^{-2u})
        for i in 1..8 {
            for j in 1..8 {
                let x = g.coord(i).powi(2);
                let expect = 2.0 - 4.0 * ((2.0 * x).exp() - (-2.0 * x).exp());
                assert!((res[g.index(i, j)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sine_mode_is_diagonal() {
        let n = 15;
        let dst = SineTransform::new(n);
        let dx = 0.1;
        let (p, q) = (3, 5);
        let mode = |i: usize, j: usize| {
            let s = |m: usize, k: usize| (std::f64::consts::PI * (m * (k + 1)) as f64 / (n + 1) as f64).sin();
            s(p, i) * s(q, j)
        };
        let mut f: Vec<f64> = (0..n * n).map(|k| mode(k / n, k % n)).collect();
        let c = 2.5;
        dst.helmholtz(&mut f, c, dx).unwrap();
        let sym = dst.laplacian_symbol(p, q, dx) - c;
        for k in 0..n * n {
            assert!((f[k] - mode(k / n, k % n) / sym).abs() < 1e-13);
        }
    }

    #[test]
    fn richardson_exact_power_law() {
        let xs = Complex64::new(0.25, -0.5);
        let c = Complex64::new(3.0, 1.0);
        let s = [0.4, 0.2, 0.1].map(|h: f64| (h, xs + c * h * h));
        let r = richardson_error(s).unwrap();
        assert!((r.exponent.unwrap() - 2.0).abs() < 1e-9);
        assert!((r.estimate - (c * 0.01).norm()).abs() < 1e-12);
        assert!(r.accepted);
        let lin = [0.4, 0.2, 0.1].map(|h: f64| (h, xs + c * h));
        assert!(!richardson_error(lin).unwrap().accepted);
        let flat = [0.4, 0.2, 0.1].map(|h: f64| (h, xs));
        let r = richardson_error(flat).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert!(r.accepted);
        let bad = [(0.4, xs), (0.2, xs + 1.0), (0.1, xs)];
        assert!(matches!(richardson_error(bad), Err(StokesError::DegenerateFit(_))));
    }
}
