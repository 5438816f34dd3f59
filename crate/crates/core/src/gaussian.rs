//! Multivariate complex Gaussian integrals,
//! `int exp(-x^T M x / 2 + b^T x + c) d^N x` over `R^N`, for complex
//! symmetric `M` with positive definite real part.

use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::{Error, Result};

pub type Cx = Complex64;

/// `M = L D L^T` without pivoting, `L` unit lower triangular.
///
/// When `Re M` is positive definite every pivot has a positive real part, so
/// the product of principal square roots of the pivots is the branch of
/// `sqrt(det M)` continuously connected to `sqrt(det Re M)`.
#[derive(Debug, Clone, Copy)]
pub struct Ldlt<const N: usize> {
    l: [[Cx; N]; N],
    d: [Cx; N],
}

impl<const N: usize> Ldlt<N> {
    pub fn new(m: &[[Cx; N]; N]) -> Result<Self> {
        let mut l = [[Cx::new(0.0, 0.0); N]; N];
        let mut d = [Cx::new(0.0, 0.0); N];
        for j in 0..N {
            let mut dj = m[j][j];
            for k in 0..j {
                dj -= l[j][k] * l[j][k] * d[k];
            }
            if !(dj.re > 0.0) {
                return Err(Error::Degenerate(
                    "Gaussian form without positive definite real part",
                ));
            }
            d[j] = dj;
            l[j][j] = Cx::new(1.0, 0.0);
            for i in j + 1..N {
                let mut s = m[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k] * d[k];
                }
                l[i][j] = s / dj;
            }
        }
        Ok(Self { l, d })
    }

    pub fn pivots(&self) -> &[Cx; N] {
        &self.d
    }

    pub fn sqrt_det(&self) -> Cx {
        self.d
            .iter()
            .fold(Cx::new(1.0, 0.0), |acc, d| acc * d.sqrt())
    }

    pub fn solve(&self, b: &[Cx; N]) -> [Cx; N] {
        let mut y = *b;
        for i in 0..N {
            for k in 0..i {
                let lk = self.l[i][k];
                y[i] -= lk * y[k];
            }
        }
        for (yi, di) in y.iter_mut().zip(self.d.iter()) {
            *yi /= *di;
        }
        for i in (0..N).rev() {
            for k in i + 1..N {
                let lk = self.l[k][i];
                y[i] -= lk * y[k];
            }
        }
        y
    }
}

/// `int exp(-x^T M x / 2 + b^T x + c) d^N x
///   = (2 pi)^(N/2) / sqrt(det M) * exp(b^T M^-1 b / 2 + c)`.
pub fn gaussian_integral<const N: usize>(m: &[[Cx; N]; N], b: &[Cx; N], c: Cx) -> Result<Cx> {
    let f = Ldlt::new(m)?;
    let x = f.solve(b);
    let quad: Cx = b.iter().zip(x.iter()).map(|(bi, xi)| bi * xi).sum();
    let norm = Float::powi(2.0 * PI, N as i32).sqrt();
    Ok((quad * 0.5 + c).exp() * norm / f.sqrt_det())
}

/// Real Cholesky factor `A = L L^T`.
pub fn cholesky<const N: usize>(a: &[[f64; N]; N]) -> Result<[[f64; N]; N]> {
    let mut l = [[0.0; N]; N];
    for j in 0..N {
        let mut s = a[j][j];
        for k in 0..j {
            s -= l[j][k] * l[j][k];
        }
        if !(s > 0.0) {
            return Err(Error::Degenerate("matrix is not positive definite"));
        }
        let ljj = Float::sqrt(s);
        l[j][j] = ljj;
        for i in j + 1..N {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / ljj;
        }
    }
    Ok(l)
}
