//! Log-log power-law fitting by least squares.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("all coordinates must be positive for a log-log fit")]
    NonPositive,
    #[error("degenerate input: all abscissae equal")]
    Degenerate,
}

/// Result of fitting `y = prefactor * x^exponent` through `(x_i, y_i)`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct FitResult {
    pub exponent: f64,
    pub prefactor: f64,
    /// Abscissa range the fit was taken over.
    pub window: (f64, f64),
    /// Largest absolute residual of `ln y` against the fitted line.
    pub max_residual: f64,
}

/// Ordinary least squares on raw coordinates; returns (slope, intercept,
/// max |residual|).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64), FitError> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(FitError::TooFewPoints {
            min: 2,
            got: xs.len().min(ys.len()),
        });
    }
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let max_resid = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    Ok((slope, intercept, max_resid))
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitResult, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints {
            min: 3,
            got: points.len(),
        });
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(FitError::NonPositive);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, max_residual) = fit_line(&xs, &ys)?;
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0f64, f64::max);
    Ok(FitResult {
        exponent: slope,
        prefactor: intercept.exp(),
        window: (lo, hi),
        max_residual,
    })
}
