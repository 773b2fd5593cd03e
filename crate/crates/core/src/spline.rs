//! Tensor-product cubic splines on uniform square grids.
//!
//! Slopes come from the standard `C^2` cubic spline system along each axis, closed with
//! fourth-order one-sided end slopes. Evaluation is bicubic Hermite per cell.

use crate::error::{Result, StokesError};

/// Interpolation slopes of a uniform 1D cubic spline (length >= 5).
fn spline_slopes(f: &[f64], h: f64, out: &mut [f64], work: &mut [f64]) {
    let n = f.len();
    let end0 = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    let end1 = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / (12.0 * h);
    out[0] = end0;
    out[n - 1] = end1;
    if n == 2 {
        return;
    }
    // tridiagonal (1, 4, 1) for interior slopes, Thomas algorithm
    let m = n - 2;
    let rhs = |i: usize| 3.0 * (f[i + 1] - f[i - 1]) / h;
    let mut d_prev = 0.0;
    let mut c_prev = 0.0;
    for k in 0..m {
        let i = k + 1;
        let mut d = rhs(i);
        if k == 0 {
            d -= end0;
        }
        if k == m - 1 {
            d -= end1;
        }
        let denom = 4.0 - if k == 0 { 0.0 } else { c_prev };
        let c = 1.0 / denom;
        let dd = (d - if k == 0 { 0.0 } else { d_prev }) / denom;
        work[k] = c;
        out[i] = dd;
        c_prev = c;
        d_prev = dd;
    }
    for k in (0..m - 1).rev() {
        let i = k + 1;
        out[i] -= work[k] * out[i + 1];
    }
}

#[derive(Clone, Debug)]
pub struct BicubicSpline {
    x0: f64,
    h: f64,
    n: usize,
    f: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
    fxy: Vec<f64>,
}

impl BicubicSpline {
    /// `values[i * n + j]` is the sample at `(x0 + i h, x0 + j h)`.
    pub fn new(x0: f64, h: f64, n: usize, values: Vec<f64>) -> Self {
        assert!(n >= 5 && values.len() == n * n);
        let mut fx = vec![0.0; n * n];
        let mut fy = vec![0.0; n * n];
        let mut fxy = vec![0.0; n * n];
        let mut line = vec![0.0; n];
        let mut out = vec![0.0; n];
        let mut work = vec![0.0; n];
        // y-direction: contiguous rows
        for i in 0..n {
            spline_slopes(&values[i * n..(i + 1) * n], h, &mut fy[i * n..(i + 1) * n], &mut work);
        }
        for j in 0..n {
            for i in 0..n {
                line[i] = values[i * n + j];
            }
            spline_slopes(&line, h, &mut out, &mut work);
            for i in 0..n {
                fx[i * n + j] = out[i];
            }
        }
        for i in 0..n {
            spline_slopes(&fx[i * n..(i + 1) * n], h, &mut fxy[i * n..(i + 1) * n], &mut work);
        }
        Self { x0, h, n, f: values, fx, fy, fxy }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let hi = self.x0 + self.h * (self.n - 1) as f64;
        let tol = 1e-12 * self.h;
        x >= self.x0 - tol && x <= hi + tol && y >= self.x0 - tol && y <= hi + tol
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !self.contains(x, y) {
            return Err(StokesError::OutOfDomain(format!("({x}, {y})")));
        }
        let n = self.n;
        let locate = |v: f64| {
            let s = (v - self.x0) / self.h;
            let i = (s.floor().max(0.0) as usize).min(n - 2);
            (i, (s - i as f64).clamp(0.0, 1.0))
        };
        let (i, t) = locate(x);
        let (j, s) = locate(y);
        let basis = |t: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            (
                [2.0 * t3 - 3.0 * t2 + 1.0, -2.0 * t3 + 3.0 * t2],
                [t3 - 2.0 * t2 + t, t3 - t2],
            )
        };
        let (hx, gx) = basis(t);
        let (hy, gy) = basis(s);
        let h = self.h;
        let mut v = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let k = (i + a) * n + (j + b);
                v += hx[a] * hy[b] * self.f[k]
                    + h * (gx[a] * hy[b] * self.fx[k] + hx[a] * gy[b] * self.fy[k])
                    + h * h * gx[a] * gy[b] * self.fxy[k];
            }
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes_exact_for_cubics() {
        let h = 0.1;
        let f: Vec<f64> = (0..12).map(|i| (i as f64 * h).powi(3) - 2.0 * (i as f64 * h)).collect();
        let mut out = vec![0.0; 12];
        let mut w = vec![0.0; 12];
        spline_slopes(&f, h, &mut out, &mut w);
        for (i, s) in out.iter().enumerate() {
            let x = i as f64 * h;
            assert!((s - (3.0 * x * x - 2.0)).abs() < 1e-12, "{i} {s}");
        }
    }

    #[test]
    fn reproduces_nodes_and_linears() {
        let n = 9;
        let h = 0.25;
        let vals: Vec<f64> = (0..n * n)
            .map(|k| {
                let (x, y) = (-1.0 + (k / n) as f64 * h, -1.0 + (k % n) as f64 * h);
                0.3 * x - 1.7 * y + 0.5
            })
            .collect();
        let sp = BicubicSpline::new(-1.0, h, n, vals.clone());
        assert!((sp.eval(-1.0 + 3.0 * h, -1.0 + 5.0 * h).unwrap() - vals[3 * n + 5]).abs() < 1e-14);
        let (x, y) = (0.123, -0.77);
        assert!((sp.eval(x, y).unwrap() - (0.3 * x - 1.7 * y + 0.5)).abs() < 1e-13);
        assert!(sp.eval(1.5, 0.0).is_err());
    }
}
