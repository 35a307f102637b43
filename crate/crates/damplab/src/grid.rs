//! Uniform discretization of the circle `R / 2·pi·Z` with spectral and
//! finite-difference differentiation and quadrature.
//!
//! Nodes are `x_j = -pi + j*h`, `h = 2*pi/n`, `j = 0..n-1`. The trapezoid
//! rule coincides with the rectangle rule on the circle and is spectrally
//! accurate for smooth periodic integrands.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid size must be even and at least 8, got {0}")]
    BadSize(usize),
    #[error("vector length {got} does not match grid size {want}")]
    LengthMismatch { got: usize, want: usize },
}

/// Differentiation scheme attached to a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Scheme {
    /// Exact differentiation of trigonometric interpolants via FFT.
    #[serde(rename = "fourier")]
    FourierSpectral,
    /// Second-order centered differences on the periodic stencil.
    #[serde(rename = "fd2")]
    Fd2,
    /// Fourth-order centered differences on the periodic stencil.
    #[serde(rename = "fd4")]
    Fd4,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::FourierSpectral => write!(f, "fourier"),
            Scheme::Fd2 => write!(f, "fd2"),
            Scheme::Fd4 => write!(f, "fd4"),
        }
    }
}

/// Immutable uniform grid on the circle. Cheap to share across workers.
pub struct CircleGrid {
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    scheme: Scheme,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CircleGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CircleGrid")
            .field("n", &self.n)
            .field("scheme", &self.scheme)
            .finish()
    }
}

impl CircleGrid {
    pub fn new(n: usize, scheme: Scheme) -> Result<Self, GridError> {
        if n < 8 || n % 2 != 0 {
            return Err(GridError::BadSize(n));
        }
        let h = 2.0 * PI / n as f64;
        let nodes = (0..n).map(|j| -PI + j as f64 * h).collect();
        let mut planner = FftPlanner::new();
        Ok(CircleGrid {
            n,
            h,
            nodes,
            scheme,
            fft_fwd: planner.plan_fft_forward(n),
            fft_inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn shared(n: usize, scheme: Scheme) -> Result<Arc<Self>, GridError> {
        Ok(Arc::new(Self::new(n, scheme)?))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Integer Fourier frequency of bin `i`: `0, 1, ..., n/2, -(n/2-1), ..., -1`.
    pub fn freq(&self, i: usize) -> f64 {
        if i <= self.n / 2 {
            i as f64
        } else {
            i as f64 - self.n as f64
        }
    }

    fn check_len(&self, len: usize) -> Result<(), GridError> {
        if len != self.n {
            Err(GridError::LengthMismatch {
                got: len,
                want: self.n,
            })
        } else {
            Ok(())
        }
    }

    /// Forward FFT normalized so entries are Fourier coefficients
    /// (coefficient of `e^{i m x}` for the trigonometric interpolant).
    pub fn fft(&self, u: &[Complex64]) -> Result<Vec<Complex64>, GridError> {
        self.check_len(u.len())?;
        let mut buf = u.to_vec();
        self.fft_fwd.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        Ok(buf)
    }

    /// Inverse of [`CircleGrid::fft`].
    pub fn ifft(&self, c: &[Complex64]) -> Result<Vec<Complex64>, GridError> {
        self.check_len(c.len())?;
        let mut buf = c.to_vec();
        self.fft_inv.process(&mut buf);
        Ok(buf)
    }

    fn spectral_multiplier(
        &self,
        u: &[Complex64],
        sym: impl Fn(f64) -> Complex64,
    ) -> Result<Vec<Complex64>, GridError> {
        let mut buf = u.to_vec();
        self.fft_fwd.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for (i, c) in buf.iter_mut().enumerate() {
            let m = if i <= self.n / 2 {
                i as f64
            } else {
                i as f64 - self.n as f64
            };
            *c *= sym(m) * scale;
        }
        self.fft_inv.process(&mut buf);
        Ok(buf)
    }

    /// First derivative in the grid's scheme.
    pub fn diff(&self, u: &[Complex64]) -> Result<Vec<Complex64>, GridError> {
        self.check_len(u.len())?;
        match self.scheme {
            Scheme::FourierSpectral => self.diff_spectral(u),
            Scheme::Fd2 => {
                let n = self.n;
                let c = 1.0 / (2.0 * self.h);
                Ok((0..n)
                    .map(|j| (u[(j + 1) % n] - u[(j + n - 1) % n]) * c)
                    .collect())
            }
            Scheme::Fd4 => {
                let n = self.n;
                let c = 1.0 / (12.0 * self.h);
                Ok((0..n)
                    .map(|j| {
                        (-u[(j + 2) % n] + u[(j + 1) % n] * 8.0 - u[(j + n - 1) % n] * 8.0
                            + u[(j + n - 2) % n])
                            * c
                    })
                    .collect())
            }
        }
    }

    /// Second derivative in the grid's scheme.
    pub fn diff2(&self, u: &[Complex64]) -> Result<Vec<Complex64>, GridError> {
        self.check_len(u.len())?;
        match self.scheme {
            Scheme::FourierSpectral => self.diff2_spectral(u),
            Scheme::Fd2 => {
                let n = self.n;
                let c = 1.0 / (self.h * self.h);
                Ok((0..n)
                    .map(|j| (u[(j + 1) % n] - u[j] * 2.0 + u[(j + n - 1) % n]) * c)
                    .collect())
            }
            Scheme::Fd4 => {
                let n = self.n;
                let c = 1.0 / (12.0 * self.h * self.h);
                Ok((0..n)
                    .map(|j| {
                        (-u[(j + 2) % n] + u[(j + 1) % n] * 16.0 - u[j] * 30.0
                            + u[(j + n - 1) % n] * 16.0
                            - u[(j + n - 2) % n])
                            * c
                    })
                    .collect())
            }
        }
    }

    /// Spectral first derivative regardless of the grid scheme. The Nyquist
    /// mode is annihilated (its sampled derivative vanishes at the nodes).
    pub fn diff_spectral(&self, u: &[Complex64]) -> Result<Vec<Complex64>, GridError> {
        self.check_len(u.len())?;
        let nyq = self.n / 2;
        let n = self.n;
        let mut buf = u.to_vec();
        self.fft_fwd.process(&mut buf);
        let scale = 1.0 / n as f64;
        for (i, c) in buf.iter_mut().enumerate() {
            let m = if i < nyq {
                i as f64
            } else if i == nyq {
                0.0
            } else {
                i as f64 - n as f64
            };
            *c *= Complex64::new(0.0, m) * scale;
        }
        self.fft_inv.process(&mut buf);
        Ok(buf)
    }

    /// Spectral second derivative regardless of the grid scheme.
    pub fn diff2_spectral(&self, u: &[Complex64]) -> Result<Vec<Complex64>, GridError> {
        self.spectral_multiplier(u, |m| Complex64::new(-m * m, 0.0))
    }

    /// Quadrature over the circle: `h * sum(g)`.
    pub fn integrate(&self, g: &[Complex64]) -> Result<Complex64, GridError> {
        self.check_len(g.len())?;
        Ok(pairwise_sum_complex(g) * self.h)
    }

    /// Real quadrature convenience for nonnegative densities.
    pub fn integrate_real(&self, g: &[f64]) -> Result<f64, GridError> {
        self.check_len(g.len())?;
        Ok(pairwise_sum(g) * self.h)
    }
}

/// Pairwise (cascade) summation: deterministic and accurate independent of
/// the order results were produced in.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    match xs.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cvec(f: impl Fn(f64) -> Complex64, grid: &CircleGrid) -> Vec<Complex64> {
        grid.nodes().iter().map(|&x| f(x)).collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(CircleGrid::new(7, Scheme::Fd2).is_err());
        assert!(CircleGrid::new(6, Scheme::Fd2).is_err());
        assert!(CircleGrid::new(9, Scheme::Fd2).is_err());
        assert!(CircleGrid::new(8, Scheme::Fd2).is_ok());
    }

    #[test]
    fn spectral_diff_sin3x() {
        let g = CircleGrid::new(64, Scheme::FourierSpectral).unwrap();
        let u = cvec(|x| Complex64::new((3.0 * x).sin(), 0.0), &g);
        let du = g.diff(&u).unwrap();
        let want = cvec(|x| Complex64::new(3.0 * (3.0 * x).cos(), 0.0), &g);
        assert!(max_err(&du, &want) < 1e-11);
    }

    #[test]
    fn diff_of_constant_is_zero_all_schemes() {
        for scheme in [Scheme::FourierSpectral, Scheme::Fd2, Scheme::Fd4] {
            let g = CircleGrid::new(32, scheme).unwrap();
            let u = vec![Complex64::new(2.5, -1.0); 32];
            let du = g.diff(&u).unwrap();
            let d2u = g.diff2(&u).unwrap();
            assert!(du.iter().all(|c| c.norm() < 1e-12), "{scheme}");
            assert!(d2u.iter().all(|c| c.norm() < 1e-11), "{scheme}");
        }
    }

    #[test]
    fn spectral_diff_complex_exponential() {
        let g = CircleGrid::new(32, Scheme::FourierSpectral).unwrap();
        let u = cvec(|x| Complex64::new(0.0, x).exp(), &g);
        let du = g.diff(&u).unwrap();
        let want: Vec<_> = u.iter().map(|c| Complex64::new(0.0, 1.0) * c).collect();
        assert!(max_err(&du, &want) < 1e-12);
    }

    #[test]
    fn spectral_diff2_sin3x() {
        let g = CircleGrid::new(64, Scheme::FourierSpectral).unwrap();
        let u = cvec(|x| Complex64::new((3.0 * x).sin(), 0.0), &g);
        let d2u = g.diff2(&u).unwrap();
        let want = cvec(|x| Complex64::new(-9.0 * (3.0 * x).sin(), 0.0), &g);
        assert!(max_err(&d2u, &want) < 1e-10);
    }

    #[test]
    fn fd2_diff2_matches_discrete_symbol() {
        let n = 64;
        let g = CircleGrid::new(n, Scheme::Fd2).unwrap();
        let h = g.h();
        let u = cvec(|x| Complex64::new(x.cos(), 0.0), &g);
        let d2u = g.diff2(&u).unwrap();
        let sym = (2.0 - 2.0 * h.cos()) / (h * h);
        for (j, &x) in g.nodes().iter().enumerate() {
            assert_relative_eq!(d2u[j].re, -x.cos() * sym, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_examples() {
        let g = CircleGrid::new(16, Scheme::Fd2).unwrap();
        let one = vec![Complex64::new(1.0, 0.0); 16];
        assert_relative_eq!(g.integrate(&one).unwrap().re, 2.0 * PI, epsilon = 1e-13);

        let cos2 = cvec(|x| Complex64::new(x.cos().powi(2), 0.0), &g);
        assert_relative_eq!(g.integrate(&cos2).unwrap().re, PI, epsilon = 1e-12);

        let sinx = cvec(|x| Complex64::new(x.sin(), 0.0), &g);
        assert!(g.integrate(&sinx).unwrap().norm() < 1e-13);
    }

    #[test]
    fn summation_by_parts_spectral() {
        let g = CircleGrid::new(48, Scheme::FourierSpectral).unwrap();
        let u = cvec(|x| Complex64::new((2.0 * x).sin() + 0.3, 0.5 * x.cos()), &g);
        let v = cvec(|x| Complex64::new(x.cos(), (3.0 * x).sin()), &g);
        let du = g.diff(&u).unwrap();
        let dv = g.diff(&v).unwrap();
        let lhs: Complex64 = g
            .integrate(&du.iter().zip(&v).map(|(a, b)| a * b.conj()).collect::<Vec<_>>())
            .unwrap();
        let rhs: Complex64 = g
            .integrate(&u.iter().zip(&dv).map(|(a, b)| a * b.conj()).collect::<Vec<_>>())
            .unwrap();
        assert!((lhs + rhs).norm() < 1e-12);
    }

    #[test]
    fn diff2_is_hermitian() {
        for scheme in [Scheme::FourierSpectral, Scheme::Fd2] {
            let g = CircleGrid::new(40, scheme).unwrap();
            let u = cvec(|x| Complex64::new((2.0 * x).cos(), x.sin()), &g);
            let v = cvec(|x| Complex64::new((3.0 * x).sin(), 0.2 * (5.0 * x).cos()), &g);
            let au = g.diff2(&u).unwrap();
            let av = g.diff2(&v).unwrap();
            let lhs = g
                .integrate(&au.iter().zip(&v).map(|(a, b)| a * b.conj()).collect::<Vec<_>>())
                .unwrap();
            let rhs = g
                .integrate(&u.iter().zip(&av).map(|(a, b)| a * b.conj()).collect::<Vec<_>>())
                .unwrap();
            assert!((lhs - rhs).norm() < 1e-10, "{scheme}");
        }
    }

    #[test]
    fn refinement_convergence_rates() {
        // u(x) = exp(sin x), u'' = (cos^2 x - sin x) exp(sin x)
        let exact = |x: f64| (x.cos().powi(2) - x.sin()) * x.sin().exp();
        let err_at = |n: usize, scheme: Scheme| {
            let g = CircleGrid::new(n, scheme).unwrap();
            let u = cvec(|x| Complex64::new(x.sin().exp(), 0.0), &g);
            let d2 = g.diff2(&u).unwrap();
            g.nodes()
                .iter()
                .zip(&d2)
                .map(|(&x, c)| (c.re - exact(x)).abs())
                .fold(0.0, f64::max)
        };
        let e32 = err_at(32, Scheme::Fd2);
        let e64 = err_at(64, Scheme::Fd2);
        let ratio = e32 / e64;
        assert!((3.0..5.0).contains(&ratio), "fd2 ratio {ratio}");
        assert!(err_at(64, Scheme::FourierSpectral) < 1e-10);
        // fd4: factor ~16 per doubling
        let r4 = err_at(32, Scheme::Fd4) / err_at(64, Scheme::Fd4);
        assert!((12.0..20.0).contains(&r4), "fd4 ratio {r4}");
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert_relative_eq!(pairwise_sum(&xs), naive, epsilon = 1e-9);
    }
}
