//! Adaptive Dormand-Prince 4(5) for complex linear systems.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StokesError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeParams {
    /// Relative tolerance; the absolute tolerance is zero.
    pub thresh: f64,
    /// Initial step in the path parameter.
    pub rstep: f64,
    pub max_step: f64,
}

impl Default for OdeParams {
    fn default() -> Self {
        Self::new(1e-14, 1e-4)
    }
}

impl OdeParams {
    pub fn new(thresh: f64, rstep: f64) -> Self {
        Self { thresh, rstep, max_step: 2.0 * rstep }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1` (with `t1 > t0`) and returns `y(t1)`.
///
/// The error norm is the RMS of `err_i / (thresh * max(|y_i|, |y_new_i|))`; components that
/// vanish at both ends of a step with zero error are skipped.
pub fn dopri5<F>(mut f: F, t0: f64, t1: f64, y0: &[Complex64], params: &OdeParams) -> Result<Vec<Complex64>>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h = params.rstep.min(params.max_step).min(t1 - t0);
    let zero = Complex64::new(0.0, 0.0);
    let mut k: Vec<Vec<Complex64>> = vec![vec![zero; n]; 7];
    let mut tmp = vec![zero; n];
    let mut ynew = vec![zero; n];
    f(t, &y, &mut k[0]);
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        if h <= 1e-15 * t.abs().max(1.0) {
            return Err(StokesError::StepCollapse(t));
        }
        macro_rules! stage {
            ($idx:expr, $c:expr, [$($j:expr => $a:expr),*]) => {{
                for i in 0..n {
                    tmp[i] = y[i] + h * (zero $(+ k[$j][i] * $a)*);
                }
                let (_, rest) = k.split_at_mut($idx);
                f(t + $c * h, &tmp, &mut rest[0]);
            }};
        }
        stage!(1, C2, [0 => A21]);
        stage!(2, C3, [0 => A31, 1 => A32]);
        stage!(3, C4, [0 => A41, 1 => A42, 2 => A43]);
        stage!(4, C5, [0 => A51, 1 => A52, 2 => A53, 3 => A54]);
        stage!(5, 1.0, [0 => A61, 1 => A62, 2 => A63, 3 => A64, 4 => A65]);
        for i in 0..n {
            ynew[i] = y[i] + h * (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6);
        }
        {
            let (_, rest) = k.split_at_mut(6);
            f(t + h, &ynew, &mut rest[0]);
        }
        let mut acc = 0.0;
        for i in 0..n {
            let e = h
                * (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7);
            let sc = params.thresh * y[i].norm().max(ynew[i].norm());
            let en = e.norm();
            if en == 0.0 {
                continue;
            }
            let q = en / sc;
            acc += q * q;
        }
        let err = (acc / n as f64).sqrt();
        if !err.is_finite() && ynew.iter().all(|v| v.is_finite()) && params.thresh > 0.0 {
            // zero scale with nonzero error: treat as a rejection
            h *= 0.2;
            continue;
        }
        if ynew.iter().any(|v| !v.is_finite()) {
            return Err(StokesError::NonFinite(format!("ODE state at t = {t}")));
        }
        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut ynew);
            // first-same-as-last
            k.swap(0, 6);
            let fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            h = (h * fac).min(params.max_step);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let p = OdeParams::new(1e-12, 1e-3);
        let y = dopri5(|_, y, dy| dy[0] = -y[0] * Complex64::new(1.0, 2.0), 0.0, 1.0, &[Complex64::new(1.0, 0.0)], &p).unwrap();
        let exact = Complex64::new(-1.0, -2.0).exp();
        assert!((y[0] - exact).norm() < 1e-11);
    }

    #[test]
    fn zero_rhs_is_identity() {
        let y = dopri5(|_, _, dy| dy.fill(Complex64::new(0.0, 0.0)), 0.0, 1.0, &[Complex64::new(2.0, 1.0), Complex64::new(0.0, 0.0)], &OdeParams::default()).unwrap();
        assert_eq!(y, vec![Complex64::new(2.0, 1.0), Complex64::new(0.0, 0.0)]);
    }
}
