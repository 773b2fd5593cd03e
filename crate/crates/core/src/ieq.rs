//! Damped fixed-point solver for the coupled integral equations on BPS rays.
//!
//! Each stored charge `gamma` carries samples of `x_gamma` along its own ray, parameterized by
//! `t` via `s = -exp(i arg Z_gamma + t)` (`s` is `hbar` for opers, `zeta` for the Hitchin
//! section). The drives on the ray are `-|Z| e^{-t}` and `-2 R |Z| cosh t`. The iteration acts
//! on the bounded correction `x - drive`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Result, StokesError};
use crate::periods::{period_of, PeriodVector};
use crate::theory::{BpsState, ChargeVector, Theory};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    Oper,
    Hitchin { r: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvolutionMethod {
    Fourier,
    Simps,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignConvention {
    Paper,
    Code,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayGrid {
    pub l: f64,
    pub steps: usize,
}

impl RayGrid {
    pub fn new(l: f64, steps: usize) -> Self {
        assert!(steps >= 2 && steps % 2 == 0, "steps must be even and at least 2");
        Self { l, steps }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.l / self.steps as f64
    }

    /// Periodic convention `t_k = -L + 2 L k / M`.
    pub fn t(&self, k: usize) -> f64 {
        -self.l + self.spacing() * k as f64
    }

    /// Signed offset of circular index `m` in `[-M/2, M/2)`.
    fn offset(&self, m: usize) -> f64 {
        let m = if m < self.steps / 2 { m as f64 } else { m as f64 - self.steps as f64 };
        m * self.spacing()
    }

    /// Simpson weights over the samples; the last interval uses the trapezoid rule.
    fn simpson_weights(&self) -> Vec<f64> {
        let n = self.steps;
        let h = self.spacing();
        let mut w = vec![0.0; n];
        // Simpson on 0..=n-2 (even number of intervals), trapezoid on the last one
        for (k, wk) in w.iter_mut().enumerate().take(n - 1) {
            *wk = if k == 0 || k == n - 2 {
                h / 3.0
            } else if k % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
        }
        w[n - 2] += h / 2.0;
        w[n - 1] += h / 2.0;
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IeqParams {
    pub l: f64,
    pub steps: usize,
    pub tolerance: f64,
    pub damping: f64,
    pub max_iter: usize,
    pub method: ConvolutionMethod,
}

impl Default for IeqParams {
    fn default() -> Self {
        Self {
            l: 200.0,
            steps: 1 << 17,
            tolerance: 2e-15,
            damping: 0.3,
            max_iter: 1000,
            method: ConvolutionMethod::Fourier,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RaySolution {
    pub mode: Mode,
    pub grid: RayGrid,
    pub states: Vec<BpsState>,
    pub intersection: Vec<Vec<i64>>,
    pub periods: PeriodVector,
    /// Central charges of the stored states.
    pub central: Vec<Complex64>,
    /// `x_gamma(t) - drive_gamma(t)` per stored state.
    pub inst: Vec<Vec<Complex64>>,
    pub iterations_used: usize,
    pub converged: bool,
    pub last_deltas: Vec<f64>,
}

/// `log(1 + e^x)`, accurate when `e^x` underflows or is tiny.
pub fn log1p_exp(x: Complex64) -> Complex64 {
    if x.re < -745.0 {
        return ZERO;
    }
    let e = x.exp();
    if e.norm() < 1e-5 {
        // series of log(1 + e)
        e * (1.0 - e * (0.5 - e * (1.0 / 3.0 - e * 0.25)))
    } else {
        (1.0 + e).ln()
    }
}

fn pairing(m: &[Vec<i64>], a: &ChargeVector, b: &ChargeVector) -> i64 {
    let n = m.len();
    let mut s = 0;
    for i in 0..n {
        for j in 0..n {
            s += a.0[i] * m[i][j] * b.0[j];
        }
    }
    s
}

/// Drive term on the ray of a charge with `|Z| = modulus`.
fn drive_on_ray(mode: Mode, modulus: f64, t: f64) -> f64 {
    match mode {
        Mode::Oper => -modulus * (-t).exp(),
        Mode::Hitchin { r } => -2.0 * r * modulus * t.cosh(),
    }
}

impl RaySolution {
    pub fn drive(&self, g: usize, k: usize) -> f64 {
        drive_on_ray(self.mode, self.central[g].norm(), self.grid.t(k))
    }

    /// Full `x_gamma(t_k)` for stored state `g`.
    pub fn x(&self, g: usize, k: usize) -> Complex64 {
        self.inst[g][k] + self.drive(g, k)
    }

    fn log_terms(&self) -> Vec<Vec<Complex64>> {
        (0..self.states.len())
            .map(|g| (0..self.grid.steps).map(|k| log1p_exp(self.x(g, k))).collect())
            .collect()
    }

    /// Index of the sample nearest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        (((t + self.grid.l) / self.grid.spacing()).round() as usize).min(self.grid.steps - 1)
    }
}

/// `x^(0)`: zero correction, i.e. `x = drive` on every ray.
pub fn initial_guess(theory: &Theory, periods: &PeriodVector, mode: Mode, grid: RayGrid) -> Result<RaySolution> {
    if let Mode::Hitchin { r } = mode {
        if r <= 0.0 {
            return Err(StokesError::BadParameter("R must be positive".into()));
        }
    }
    let central = theory
        .gamma_prime
        .iter()
        .map(|s| period_of(&s.charge, periods))
        .collect::<Result<Vec<_>>>()?;
    Ok(RaySolution {
        mode,
        grid,
        states: theory.gamma_prime.clone(),
        intersection: theory.intersection.clone(),
        periods: periods.clone(),
        central,
        inst: vec![vec![ZERO; grid.steps]; theory.gamma_prime.len()],
        iterations_used: 0,
        converged: false,
        last_deltas: Vec::new(),
    })
}

struct Coupling {
    target: usize,
    source: usize,
    coeff: f64,
    phase: f64,
}

fn couplings(sol: &RaySolution) -> Result<Vec<Coupling>> {
    let mut out = Vec::new();
    for (g, sg) in sol.states.iter().enumerate() {
        for (mu, sm) in sol.states.iter().enumerate() {
            let c = sm.omega * pairing(&sol.intersection, &sm.charge, &sg.charge);
            if c == 0 {
                continue;
            }
            let phase = sol.central[g].arg() - sol.central[mu].arg();
            if phase.sin().abs() < 1e-12 {
                return Err(StokesError::KernelSingularity(g, mu));
            }
            out.push(Coupling { target: g, source: mu, coeff: c as f64, phase });
        }
    }
    Ok(out)
}

/// Convolution operator `K[L]_gamma = sum_mu c_{gamma mu} / (2 pi i) int L_mu(t') / sinh(t - t' + i delta) dt'`.
enum Convolver {
    Fourier {
        fwd: Arc<dyn Fft<f64>>,
        inv: Arc<dyn Fft<f64>>,
        kernels: Vec<(usize, usize, Vec<Complex64>)>,
    },
    Simps {
        weights: Vec<f64>,
        couplings: Vec<Coupling>,
    },
}

impl Convolver {
    fn new(sol: &RaySolution, method: ConvolutionMethod) -> Result<Self> {
        let cs = couplings(sol)?;
        let grid = sol.grid;
        match method {
            ConvolutionMethod::Fourier => {
                let mut planner = FftPlanner::new();
                let fwd = planner.plan_fft_forward(grid.steps);
                let inv = planner.plan_fft_inverse(grid.steps);
                let h = grid.spacing();
                let kernels = cs
                    .iter()
                    .map(|c| {
                        let pref = c.coeff / (2.0 * PI) * (-I) * h / grid.steps as f64;
                        let mut k: Vec<Complex64> = (0..grid.steps)
                            .map(|m| pref / Complex64::new(grid.offset(m), c.phase).sinh())
                            .collect();
                        fwd.process(&mut k);
                        (c.target, c.source, k)
                    })
                    .collect();
                Ok(Convolver::Fourier { fwd, inv, kernels })
            }
            ConvolutionMethod::Simps => Ok(Convolver::Simps { weights: grid.simpson_weights(), couplings: cs }),
        }
    }

    fn apply(&self, sol: &RaySolution, logs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let n = sol.states.len();
        let m = sol.grid.steps;
        match self {
            Convolver::Fourier { fwd, inv, kernels } => {
                let spectra: Vec<Vec<Complex64>> = logs
                    .iter()
                    .map(|l| {
                        let mut v = l.clone();
                        fwd.process(&mut v);
                        v
                    })
                    .collect();
                let mut acc = vec![vec![ZERO; m]; n];
                for (g, mu, k) in kernels {
                    for ((a, kv), lv) in acc[*g].iter_mut().zip(k).zip(&spectra[*mu]) {
                        *a += kv * lv;
                    }
                }
                for a in acc.iter_mut() {
                    inv.process(a);
                }
                acc
            }
            Convolver::Simps { weights, couplings } => {
                let mut acc = vec![vec![ZERO; m]; n];
                for c in couplings {
                    let pref = c.coeff / (2.0 * PI) * (-I);
                    let src = &logs[c.source];
                    for (k, out) in acc[c.target].iter_mut().enumerate() {
                        let tk = sol.grid.t(k);
                        let mut s = ZERO;
                        for (j, (w, lj)) in weights.iter().zip(src).enumerate() {
                            if lj.re == 0.0 && lj.im == 0.0 {
                                continue;
                            }
                            let d = tk - sol.grid.t(j);
                            s += lj * *w / Complex64::new(d, c.phase).sinh();
                        }
                        *out += pref * s;
                    }
                }
                acc
            }
        }
    }
}

/// `F(x)` sampled on every stored ray: drive plus the convolution term.
pub fn apply_f(sol: &RaySolution, method: ConvolutionMethod) -> Result<Vec<Vec<Complex64>>> {
    let conv = Convolver::new(sol, method)?;
    let logs = sol.log_terms();
    let corr = conv.apply(sol, &logs);
    Ok(corr
        .into_iter()
        .enumerate()
        .map(|(g, c)| c.into_iter().enumerate().map(|(k, v)| v + sol.drive(g, k)).collect())
        .collect())
}

/// Iterate `x <- (1 - p) F(x) + p x` until the sup-norm change stays below `tolerance` for 5
/// consecutive iterations. Non-convergence returns the last iterate with `converged = false`.
pub fn solve_fixed_point(
    theory: &Theory,
    periods: &PeriodVector,
    mode: Mode,
    params: &IeqParams,
) -> Result<RaySolution> {
    if !(0.0..1.0).contains(&params.damping) || params.tolerance <= 0.0 {
        return Err(StokesError::BadParameter("damping must lie in [0,1) and tolerance be positive".into()));
    }
    let mut sol = initial_guess(theory, periods, mode, RayGrid::new(params.l, params.steps))?;
    let conv = Convolver::new(&sol, params.method)?;
    let p = params.damping;
    let mut streak = 0;
    let mut deltas = Vec::new();
    for it in 1..=params.max_iter {
        let logs = sol.log_terms();
        let new = conv.apply(&sol, &logs);
        let mut delta: f64 = 0.0;
        for (old, fresh) in sol.inst.iter_mut().zip(new) {
            for (o, f) in old.iter_mut().zip(fresh) {
                let next = f * (1.0 - p) + *o * p;
                delta = delta.max((next - *o).norm());
                *o = next;
            }
        }
        if !delta.is_finite() {
            return Err(StokesError::NonFinite(format!("iteration {it}")));
        }
        deltas.push(delta);
        if deltas.len() > 5 {
            deltas.remove(0);
        }
        sol.iterations_used = it;
        streak = if delta < params.tolerance { streak + 1 } else { 0 };
        if streak >= 5 {
            sol.converged = true;
            break;
        }
    }
    sol.last_deltas = deltas;
    Ok(sol)
}

impl RaySolution {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(StokesError::NotConverged { iterations: self.iterations_used, last_deltas: self.last_deltas })
        }
    }

    /// `x_gamma` at an arbitrary spectral parameter, by Simpson quadrature over the ray data.
    pub fn evaluate_at(&self, charge: &ChargeVector, spectral_param: Complex64) -> Result<Complex64> {
        if spectral_param == ZERO {
            return Err(StokesError::ZeroSpectralParameter);
        }
        if charge.len() != self.periods.values.len() {
            return Err(StokesError::DimensionMismatch { expected: self.periods.values.len(), got: charge.len() });
        }
        let z = period_of(charge, &self.periods)?;
        let zeta = spectral_param;
        let mut total = match self.mode {
            Mode::Oper => z / zeta,
            Mode::Hitchin { r } => z * r / zeta + zeta * z.conj() * r,
        };
        let weights = self.grid.simpson_weights();
        let mut integral = ZERO;
        for (mu, s) in self.states.iter().enumerate() {
            let c = s.omega * pairing(&self.intersection, charge, &s.charge);
            if c == 0 {
                continue;
            }
            let dphi = zeta.arg() - self.central[mu].arg();
            if dphi.sin().abs() < 1e-9 {
                return Err(StokesError::RayCollision(mu));
            }
            let phase = Complex64::from_polar(1.0, self.central[mu].arg());
            let mut acc = ZERO;
            for (k, w) in weights.iter().enumerate() {
                let l = log1p_exp(self.x(mu, k));
                if l == ZERO {
                    continue;
                }
                let xi = -phase * self.grid.t(k).exp();
                acc += l * *w * zeta / (xi - zeta * zeta / xi);
            }
            integral += acc * c as f64;
        }
        total += integral / (I * PI);
        Ok(total)
    }

    /// The integral part of `x_gamma`, i.e. `x_gamma` minus its drive.
    pub fn inst_at(&self, charge: &ChargeVector, spectral_param: Complex64) -> Result<Complex64> {
        let z = period_of(charge, &self.periods)?;
        let drive = match self.mode {
            Mode::Oper => z / spectral_param,
            Mode::Hitchin { r } => z * r / spectral_param + spectral_param * z.conj() * r,
        };
        Ok(self.evaluate_at(charge, spectral_param)? - drive)
    }

    /// Basis coordinates `X_i` at `spectral_param`, optionally converted to the code convention
    /// `X^code = sigma(gamma) X^paper`.
    pub fn cluster_at(&self, theory: &Theory, spectral_param: Complex64, convention: SignConvention) -> Result<Vec<Complex64>> {
        (0..theory.lattice_rank)
            .map(|i| {
                let gamma = theory.basis_charge(i);
                let x = self.evaluate_at(&gamma, spectral_param)?.exp();
                Ok(match convention {
                    SignConvention::Paper => x,
                    SignConvention::Code => x * theory.refinement_sign(&gamma) as f64,
                })
            })
            .collect()
    }

    /// Cluster at `hbar = 1` or `zeta = 1`.
    pub fn cluster_at_unit(&self, theory: &Theory, convention: SignConvention) -> Result<Vec<Complex64>> {
        self.cluster_at(theory, Complex64::new(1.0, 0.0), convention)
    }

    /// Sup-norm of `F(x) - x` over all rays.
    pub fn residual(&self, method: ConvolutionMethod) -> Result<f64> {
        let f = apply_f(self, method)?;
        let mut r: f64 = 0.0;
        for (g, fg) in f.iter().enumerate() {
            for (k, v) in fg.iter().enumerate() {
                r = r.max((v - self.x(g, k)).norm());
            }
        }
        Ok(r)
    }
}

/// Leading asymptotics: `exp(Z/hbar)` for opers, `exp(R Z/zeta + R zeta conj(Z))` for the Hitchin section.
pub fn asymptotic_approx(z: Complex64, mode: Mode, spectral_param: Complex64) -> Result<Complex64> {
    if spectral_param == ZERO {
        return Err(StokesError::ZeroSpectralParameter);
    }
    Ok(match mode {
        Mode::Oper => (z / spectral_param).exp(),
        Mode::Hitchin { r } => (z * r / spectral_param + spectral_param * z.conj() * r).exp(),
    })
}

/// Single-ray reduction of the symmetric A1A2 Hitchin system at `c = 1`, `R = 1`.
///
/// By the cyclic symmetry all three rays carry the same function, which solves
/// `x = x0 - K+ * log(1 + e^x)` with `x0 = -2 M cosh t` and
/// `K+(t) = (2 sqrt 3/pi) cosh t / (2 cosh 2t + 1)`. The cross ratio is `exp(y(0))` with
/// `y(0) = (sqrt 3/2) x0(0) - int k_y(t) log(1 + e^{x(t)}) dt` and
/// `k_y(t) = (1/pi) (1/(2 cosh t) + cosh t / (2 cosh 2t - 1))`.
pub struct SymmetricReduction {
    pub grid: RayGrid,
    pub x: Vec<f64>,
    pub x0: Vec<f64>,
    pub cross_ratio: f64,
    pub iterations: usize,
}

pub fn symmetric_a1a2_reduction(modulus: f64, grid: RayGrid, tolerance: f64, max_iter: usize) -> SymmetricReduction {
    let m = grid.steps;
    let h = grid.spacing();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut kernel: Vec<Complex64> = (0..m)
        .map(|j| {
            let s = grid.offset(j);
            let v = if s.abs() > 350.0 { 0.0 } else { (2.0 * 3f64.sqrt() / PI) * s.cosh() / (2.0 * (2.0 * s).cosh() + 1.0) };
            Complex64::new(v * h / m as f64, 0.0)
        })
        .collect();
    fwd.process(&mut kernel);
    let x0: Vec<f64> = (0..m).map(|k| -2.0 * modulus * grid.t(k).cosh()).collect();
    let mut corr = vec![0.0; m];
    let mut iterations = 0;
    for it in 1..=max_iter {
        let mut buf: Vec<Complex64> = (0..m)
            .map(|k| log1p_exp(Complex64::new(x0[k] + corr[k], 0.0)))
            .collect();
        fwd.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&kernel) {
            *b *= k;
        }
        inv.process(&mut buf);
        let mut delta: f64 = 0.0;
        for (c, b) in corr.iter_mut().zip(&buf) {
            let next = -b.re;
            delta = delta.max((next - *c).abs());
            *c = next;
        }
        iterations = it;
        if delta < tolerance {
            break;
        }
    }
    let x: Vec<f64> = x0.iter().zip(&corr).map(|(a, b)| a + b).collect();
    let weights = grid.simpson_weights();
    let mid = grid.steps / 2;
    let integral: f64 = (0..m)
        .map(|k| {
            let t = grid.t(k);
            if t.abs() > 350.0 {
                return 0.0;
            }
            let ky = (1.0 / PI) * (1.0 / (2.0 * t.cosh()) + t.cosh() / (2.0 * (2.0 * t).cosh() - 1.0));
            weights[k] * ky * log1p_exp(Complex64::new(x[k], 0.0)).re
        })
        .sum();
    let y0 = 3f64.sqrt() / 2.0 * x0[mid] - integral;
    SymmetricReduction { grid, x, x0, cross_ratio: y0.exp(), iterations }
}
