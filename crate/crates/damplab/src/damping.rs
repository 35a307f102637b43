//! Damping functions on the circle.
//!
//! A profile is a one-sided power envelope: the reference shape `V` vanishes
//! on `[-sigma, sigma]` and grows like `(|x| - sigma)^beta` outside it, and
//! every admissible damping `W` is pinched between `V/c0` and `c0*V`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::CircleGrid;

#[derive(Debug, Error)]
pub enum DampingError {
    #[error("sigma out of (0, pi): {0}")]
    SigmaOutOfRange(f64),
    #[error("beta must be >= 0, got {0}")]
    NegativeBeta(f64),
    #[error("c0 must be >= 1, got {0}")]
    BadC0(f64),
    #[error("scaled variant needs 1/c0 <= c <= c0, got c={c} with c0={c0}")]
    BadScale { c: f64, c0: f64 },
    #[error("|x| must be <= pi, got x={0}")]
    OutOfDomain(f64),
    #[error("sample length {got} does not match grid size {want}")]
    LengthMismatch { got: usize, want: usize },
}

/// How the damping realizes the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `W = V` exactly.
    ExactV,
    /// `W = c * V` for a fixed `c` in `[1/c0, c0]`.
    Scaled(f64),
    /// `W = V * (1 + eps * cos x)`, clipped into `[V/c0, c0*V]`. Exercises
    /// the slack the envelope allows without leaving it.
    PlateauPerturbed(f64),
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::ExactV => write!(f, "exact-v"),
            Variant::Scaled(c) => write!(f, "scaled({c})"),
            Variant::PlateauPerturbed(e) => write!(f, "plateau-perturbed({e})"),
        }
    }
}

/// Envelope parameters plus the chosen variant. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingProfile {
    sigma: f64,
    beta: f64,
    c0: f64,
    variant: Variant,
}

impl DampingProfile {
    pub fn new(sigma: f64, beta: f64, c0: f64, variant: Variant) -> Result<Self, DampingError> {
        if !(sigma > 0.0 && sigma < PI) {
            return Err(DampingError::SigmaOutOfRange(sigma));
        }
        if !(beta >= 0.0) {
            return Err(DampingError::NegativeBeta(beta));
        }
        if !(c0 >= 1.0) {
            return Err(DampingError::BadC0(c0));
        }
        if let Variant::Scaled(c) = variant {
            if !(c >= 1.0 / c0 && c <= c0) {
                return Err(DampingError::BadScale { c, c0 });
            }
        }
        Ok(DampingProfile {
            sigma,
            beta,
            c0,
            variant,
        })
    }

    /// `W = V` with `c0 = 1`.
    pub fn exact_v(sigma: f64, beta: f64) -> Result<Self, DampingError> {
        Self::new(sigma, beta, 1.0, Variant::ExactV)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Reference envelope shape. Zero on the closed interval `[-sigma, sigma]`
    /// (nodes landing exactly on `±sigma` evaluate to zero), `(|x|-sigma)^beta`
    /// outside. Even in `x`.
    pub fn eval_v(&self, x: f64) -> Result<f64, DampingError> {
        if x.abs() > PI {
            return Err(DampingError::OutOfDomain(x));
        }
        Ok(self.v_unchecked(x))
    }

    fn v_unchecked(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= self.sigma {
            0.0
        } else {
            (ax - self.sigma).powf(self.beta)
        }
    }

    /// Damping value at `x` for the profile's variant. Always within
    /// `[V(x)/c0, c0*V(x)]`.
    pub fn eval_w(&self, x: f64) -> Result<f64, DampingError> {
        if x.abs() > PI {
            return Err(DampingError::OutOfDomain(x));
        }
        Ok(self.w_unchecked(x))
    }

    fn w_unchecked(&self, x: f64) -> f64 {
        let v = self.v_unchecked(x);
        match self.variant {
            Variant::ExactV => v,
            Variant::Scaled(c) => c * v,
            Variant::PlateauPerturbed(eps) => {
                let raw = v * (1.0 + eps * x.cos());
                raw.clamp(v / self.c0, self.c0 * v)
            }
        }
    }

    /// Damping sampled at the grid nodes.
    pub fn sample_on_grid(&self, grid: &CircleGrid) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.w_unchecked(x)).collect()
    }

    /// Envelope sampled at the grid nodes.
    pub fn sample_v_on_grid(&self, grid: &CircleGrid) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.v_unchecked(x)).collect()
    }

    /// Checks that every sample lies in `[V(x_j)/c0, c0*V(x_j)]` and reports
    /// the largest ratio by which any sample escapes the envelope (1 when all
    /// samples are inside).
    pub fn validate_envelope(
        &self,
        samples: &[f64],
        grid: &CircleGrid,
    ) -> Result<EnvelopeReport, DampingError> {
        if samples.len() != grid.n() {
            return Err(DampingError::LengthMismatch {
                got: samples.len(),
                want: grid.n(),
            });
        }
        let mut worst: f64 = 1.0;
        let mut valid = true;
        for (&s, &x) in samples.iter().zip(grid.nodes()) {
            let v = self.v_unchecked(x);
            let lo = v / self.c0;
            let hi = self.c0 * v;
            if s >= lo && s <= hi {
                continue;
            }
            valid = false;
            let ratio = if s > hi {
                if hi > 0.0 {
                    s / hi
                } else {
                    f64::INFINITY
                }
            } else if s > 0.0 {
                lo / s
            } else {
                f64::INFINITY
            };
            worst = worst.max(ratio);
        }
        Ok(EnvelopeReport { valid, worst })
    }
}

/// Outcome of an envelope validation.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeReport {
    pub valid: bool,
    /// Largest factor by which a sample escapes `[V/c0, c0*V]`; 1 when valid.
    pub worst: f64,
}
