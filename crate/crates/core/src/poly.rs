//! Dense complex polynomials in ascending coefficient order.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

impl ComplexPoly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Returns `z -> self(a z + b)`.
    pub fn compose_affine(&self, a: Complex64, b: Complex64) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        // Horner in polynomial arithmetic: acc = acc * (a z + b) + c
        for &c in self.coeffs.iter().rev() {
            let mut next = vec![Complex64::new(0.0, 0.0); out.len()];
            for (k, &v) in out.iter().enumerate() {
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                next[k] += v * b;
                if k + 1 < next.len() {
                    next[k + 1] += v * a;
                }
            }
            next[0] += c;
            out = next;
        }
        Self::new(out)
    }

    /// Roots from the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Vec<Complex64> {
        let Some(deg) = self.degree() else {
            return Vec::new();
        };
        if deg == 0 {
            return Vec::new();
        }
        let lead = self.leading();
        let mut m = DMatrix::<Complex64>::zeros(deg, deg);
        for i in 1..deg {
            m[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..deg {
            m[(i, deg - 1)] = -self.coeffs[i] / lead;
        }
        let schur = nalgebra::linalg::Schur::new(m);
        let (_, t) = schur.unpack();
        let mut roots: Vec<Complex64> = (0..deg).map(|i| t[(i, i)]).collect();
        // one Newton polish per root against the original coefficients
        let dp = self.derivative();
        for r in roots.iter_mut() {
            let d = dp.eval(*r);
            if d.norm() > 0.0 {
                let step = self.eval(*r) / d;
                if step.is_finite() {
                    *r -= step;
                }
            }
        }
        roots
    }

    pub fn max_root_modulus(&self) -> f64 {
        self.roots().iter().map(|r| r.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = ComplexPoly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(p.degree(), Some(0));
        assert!(ComplexPoly::from_real(&[0.0, 0.0]).is_zero());
    }

    #[test]
    fn cube_roots_of_unity() {
        let p = ComplexPoly::from_real(&[-1.0, 0.0, 0.0, 1.0]);
        let roots = p.roots();
        assert_eq!(roots.len(), 3);
        for r in roots {
            assert!((r.norm() - 1.0).abs() < 1e-14);
            assert!(p.eval(r).norm() < 1e-14);
        }
    }

    #[test]
    fn affine_composition_matches_pointwise() {
        let p = ComplexPoly::new(vec![c(0.3, -1.0), c(2.0, 0.5), c(-1.0, 0.0), c(0.5, 0.25)]);
        let a = c(0.7, 0.2);
        let b = c(-0.4, 1.1);
        let q = p.compose_affine(a, b);
        for z in [c(0.0, 0.0), c(1.3, -0.2), c(-2.0, 0.7)] {
            assert!((q.eval(z) - p.eval(a * z + b)).norm() < 1e-12);
        }
    }
}
