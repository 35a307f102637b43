//! Weight functions and functionals used in the commutator/multiplier
//! arguments for the stationary problem, with numerical certification of
//! each inequality on computed solutions.
//!
//! The geometry is controlled by the transition layer `|x| in
//! [sigma, sigma + q^{-delta}]` with `delta = 1/(beta+2)`: the weight `mu`
//! boosts that layer by `q^delta`, `chi` ramps linearly across it, `b` is a
//! piecewise-linear odd weight made periodic by a negative slope `-M` past a
//! cut `tau`, and `psi` is a smooth bump supported away from the undamped
//! region. The exponent ladder `eta_0 > ... > eta_N` slices the damped
//! region for the final case analysis.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::damping::DampingProfile;
use crate::grid::{CircleGrid, GridError};
use crate::rng;
use crate::stationary::StationarySolve;

#[derive(Debug, Error)]
pub enum MultiplierError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("tau must satisfy sigma + q^(-delta) < tau < pi, got tau={tau} (layer ends {layer_end})")]
    BadTau { tau: f64, layer_end: f64 },
    #[error("psi must vanish near the undamped region; nonzero at |x|={0}")]
    PsiSupport(f64),
    #[error("inputs must be nonnegative, got {0}")]
    NegativeInput(f64),
    #[error("theta must lie in (0, 1], got {0}")]
    BadTheta(f64),
    #[error("q must be > 1 for layer weights, got {0}")]
    QTooSmall(f64),
}

/// `delta = 1/(beta+2)`, the layer-width exponent.
pub fn delta(beta: f64) -> f64 {
    1.0 / (beta + 2.0)
}

/// Layer boost weight: `q^delta` on `|x| in [sigma, sigma+q^{-delta}]`,
/// `1` elsewhere.
pub fn mu_at(x: f64, q: f64, profile: &DampingProfile) -> f64 {
    let d = delta(profile.beta());
    let ax = x.abs();
    let s = profile.sigma();
    if ax >= s && ax <= s + q.powf(-d) {
        q.powf(d)
    } else {
        1.0
    }
}

/// Layer ramp: 0 inside the undamped region, `q^delta (|x|-sigma)` across
/// the layer, 1 beyond. Continuous, piecewise linear, even.
pub fn chi_at(x: f64, q: f64, profile: &DampingProfile) -> f64 {
    let d = delta(profile.beta());
    let ax = x.abs();
    let s = profile.sigma();
    if ax <= s {
        0.0
    } else {
        (q.powf(d) * (ax - s)).min(1.0)
    }
}

/// Exponent ladder for the damped-region case analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSchedule {
    /// Number of interior layers `N`; the ladder has `N+1` entries.
    pub n_layers: usize,
    /// `eta_0 = delta > eta_1 > ... > eta_N > 0`.
    pub eta: Vec<f64>,
}

/// Smallest ladder depth `N` with `beta <= 6(3^{N+1}-1)`, and the closed-form
/// ladder `eta_k = delta (3^{N+1}-3^k)/(3^{N+1}-1)`.
pub fn eta_schedule(beta: f64) -> EtaSchedule {
    let d = delta(beta);
    let mut n = 0usize;
    loop {
        let p = 3.0f64.powi(n as i32 + 1);
        if beta <= 6.0 * (p - 1.0) {
            let eta = (0..=n)
                .map(|k| d * (p - 3.0f64.powi(k as i32)) / (p - 1.0))
                .collect();
            return EtaSchedule { n_layers: n, eta };
        }
        n += 1;
    }
}

/// Piecewise-linear periodic weight: slope 1 inside the undamped region and
/// in the damped bulk up to `tau`, `q^delta` across the layer, and `-M` past
/// `tau`, with `M` solving the periodicity condition (zero mean slope).
/// Returns `(b, b', M)` sampled at the grid nodes.
pub fn weight_b(
    grid: &CircleGrid,
    q: f64,
    profile: &DampingProfile,
    tau: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64), MultiplierError> {
    if q <= 1.0 {
        return Err(MultiplierError::QTooSmall(q));
    }
    let d = delta(profile.beta());
    let s = profile.sigma();
    let layer = q.powf(-d);
    let layer_end = s + layer;
    if !(layer_end < tau && tau < PI) {
        return Err(MultiplierError::BadTau { tau, layer_end });
    }
    let m_slope = (tau + 1.0 - layer) / (PI - tau);
    let qd = q.powf(d);

    // slope as a function of |x|
    let slope = |t: f64| -> f64 {
        if t < s {
            1.0
        } else if t <= layer_end {
            qd
        } else if t <= tau {
            1.0
        } else {
            -m_slope
        }
    };
    // antiderivative of the slope from 0; vanishes at pi by the choice of M
    let anti = |t: f64| -> f64 {
        if t <= s {
            t
        } else if t <= layer_end {
            s + qd * (t - s)
        } else if t <= tau {
            s + 1.0 + (t - layer_end)
        } else {
            tau + 1.0 - layer - m_slope * (t - tau)
        }
    };

    let b: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| x.signum() * anti(x.abs()))
        .collect();
    let b_prime: Vec<f64> = grid.nodes().iter().map(|&x| slope(x.abs())).collect();
    Ok((b, b_prime, m_slope))
}

/// Default cut for `weight_b`: midpoint of `(sigma, pi)`, keeping the
/// balancing slope `M` moderate.
pub fn default_tau(profile: &DampingProfile) -> f64 {
    0.5 * (profile.sigma() + PI)
}

/// Smooth bump vanishing for `|x| <= sigma + (pi-sigma)/4`, equal to 1 at
/// `|x| = pi`, flat at the seam. Profile `exp(1 - 1/(1-s^2))` in the
/// rescaled variable `s = (|x|-pi)/(pi-a)`.
pub fn psi_default(grid: &CircleGrid, profile: &DampingProfile) -> Vec<f64> {
    let a = profile.sigma() + (PI - profile.sigma()) / 4.0;
    grid.nodes()
        .iter()
        .map(|&x| {
            let ax = x.abs();
            if ax <= a {
                0.0
            } else {
                let s = (ax - PI) / (PI - a);
                let t = 1.0 - s * s;
                if t <= 0.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / t).exp()
                }
            }
        })
        .collect()
}

/// Largest value of `(|psi''| + |psi|)/W` over the support of `psi`; finite
/// because `W` is bounded below there.
pub fn psi_envelope_constant(
    psi: &[f64],
    profile: &DampingProfile,
    grid: &CircleGrid,
) -> Result<f64, MultiplierError> {
    let cpsi: Vec<Complex64> = psi.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    let ddpsi = grid.diff2_spectral(&cpsi)?;
    let mut c = 0.0f64;
    for (j, &x) in grid.nodes().iter().enumerate() {
        if psi[j] == 0.0 {
            continue;
        }
        let w = profile.eval_w(x).expect("grid nodes are in domain");
        if w > 0.0 {
            c = c.max((ddpsi[j].re.abs() + psi[j]) / w);
        }
    }
    Ok(c)
}

/// All weights for one `(q, profile)` pair sampled on a grid.
#[derive(Debug, Clone)]
pub struct MultiplierWeights {
    pub delta: f64,
    pub tau: f64,
    pub mu: Vec<f64>,
    pub chi: Vec<f64>,
    pub b: Vec<f64>,
    pub b_prime: Vec<f64>,
    pub psi: Vec<f64>,
    pub big_m: f64,
    pub eta: EtaSchedule,
}

pub fn build_weights(
    grid: &CircleGrid,
    q: f64,
    profile: &DampingProfile,
    tau: Option<f64>,
) -> Result<MultiplierWeights, MultiplierError> {
    let tau = tau.unwrap_or_else(|| default_tau(profile));
    let (b, b_prime, big_m) = weight_b(grid, q, profile, tau)?;
    Ok(MultiplierWeights {
        delta: delta(profile.beta()),
        tau,
        mu: grid.nodes().iter().map(|&x| mu_at(x, q, profile)).collect(),
        chi: grid.nodes().iter().map(|&x| chi_at(x, q, profile)).collect(),
        b,
        b_prime,
        psi: psi_default(grid, profile),
        big_m,
        eta: eta_schedule(profile.beta()),
    })
}

/// Pointwise energy density `|u'|^2 + E |u|^2` with spectral `u'`.
pub fn energy_density(u: &[Complex64], e: f64, grid: &CircleGrid) -> Result<Vec<f64>, GridError> {
    let du = grid.diff_spectral(u)?;
    Ok(u.iter()
        .zip(&du)
        .map(|(uj, duj)| duj.norm_sqr() + e * uj.norm_sqr())
        .collect())
}

/// One certified inequality instance.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub q: f64,
    pub e: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs/rhs`, or 0 when both sides vanish.
    pub ratio: f64,
    /// `rhs - lhs`; meaningful for the identities certified pointwise.
    pub slack: f64,
    pub pass: bool,
}

fn ratio_or_zero(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

fn integrate_density(grid: &CircleGrid, values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    grid.integrate_real(&v).expect("sample length matches grid")
}

/// Damping absorption identity: `int W |u|^2 <= q^{-1} int |f u|`. Holds to
/// roundoff on every accepted solve; the report's slack is `rhs - lhs`.
pub fn check_wu(solve: &StationarySolve) -> CheckReport {
    let grid = solve.grid();
    let lhs = integrate_density(
        grid,
        solve
            .w()
            .iter()
            .zip(solve.u())
            .map(|(w, u)| w * u.norm_sqr()),
    );
    let rhs = integrate_density(
        grid,
        solve
            .f()
            .iter()
            .zip(solve.u())
            .map(|(f, u)| (f * u.conj()).norm()),
    ) / solve.q();
    let slack = rhs - lhs;
    CheckReport {
        name: "wu",
        q: solve.q(),
        e: solve.e(),
        lhs,
        rhs,
        ratio: ratio_or_zero(lhs, rhs),
        slack,
        pass: slack >= -1e-12 * rhs.abs(),
    }
}

/// Derivative control away from the undamped region:
/// `int psi |u'|^2 <= C (1 + max(0,E)/q) int |f u|`. The report carries the
/// realized ratio; sweeps assert the ratio stays bounded.
pub fn check_psi(
    solve: &StationarySolve,
    psi: &[f64],
) -> Result<CheckReport, MultiplierError> {
    let grid = solve.grid();
    if psi.len() != grid.n() {
        return Err(GridError::LengthMismatch {
            got: psi.len(),
            want: grid.n(),
        }
        .into());
    }
    // psi must vanish on a neighborhood of the undamped region
    let sigma = sigma_from_w(solve);
    for (&p, &x) in psi.iter().zip(grid.nodes()) {
        if p != 0.0 && x.abs() <= sigma {
            return Err(MultiplierError::PsiSupport(x.abs()));
        }
    }
    let du = grid.diff_spectral(solve.u())?;
    let lhs = integrate_density(grid, psi.iter().zip(&du).map(|(p, d)| p * d.norm_sqr()));
    let fu = integrate_density(
        grid,
        solve
            .f()
            .iter()
            .zip(solve.u())
            .map(|(f, u)| (f * u.conj()).norm()),
    );
    let rhs = (1.0 + solve.e().max(0.0) / solve.q()) * fu;
    let ratio = ratio_or_zero(lhs, rhs);
    Ok(CheckReport {
        name: "psi",
        q: solve.q(),
        e: solve.e(),
        lhs,
        rhs,
        ratio,
        slack: rhs - lhs,
        pass: ratio.is_finite(),
    })
}

// The undamped half-width is not stored on the solve; recover it as the
// largest |x| with W = 0 (grid resolution accuracy is all the support checks
// need).
fn sigma_from_w(solve: &StationarySolve) -> f64 {
    let grid = solve.grid();
    let mut s = 0.0f64;
    for (&w, &x) in solve.w().iter().zip(grid.nodes()) {
        if w == 0.0 {
            s = s.max(x.abs());
        }
    }
    s
}

/// Layer-boosted energy inequality:
/// `int mu |u'|^2 + E mu |u|^2 <= C (int |f|^2 + q int W |u u'|)`.
pub fn check_lemma_mu(solve: &StationarySolve, weights: &MultiplierWeights) -> CheckReport {
    let grid = solve.grid();
    let du = grid.diff_spectral(solve.u()).expect("solve vectors match grid");
    let lhs = integrate_density(
        grid,
        weights
            .mu
            .iter()
            .zip(solve.u())
            .zip(&du)
            .map(|((m, u), d)| m * (d.norm_sqr() + solve.e() * u.norm_sqr())),
    );
    let f2 = integrate_density(grid, solve.f().iter().map(|f| f.norm_sqr()));
    let wud = integrate_density(
        grid,
        solve
            .w()
            .iter()
            .zip(solve.u())
            .zip(&du)
            .map(|((w, u), d)| w * u.norm() * d.norm()),
    );
    let rhs = f2 + solve.q() * wud;
    CheckReport {
        name: "lemma-mu",
        q: solve.q(),
        e: solve.e(),
        lhs,
        rhs,
        ratio: ratio_or_zero(lhs, rhs),
        slack: rhs - lhs,
        pass: true,
    }
}

/// Closed form of the layered estimate:
/// `int mu |u'|^2 + E mu |u|^2 <= C ((1 + E^{-1} q^{2 delta}) int |f|^2
///  + q^{1/2} (int |f u|)^{1/2} (int |W chi f u|)^{1/2})`. Requires `E >= 1`.
pub fn check_lemma_fuwfu(solve: &StationarySolve, weights: &MultiplierWeights) -> CheckReport {
    assert!(
        solve.e() >= 1.0,
        "lemma-fuwfu is certified for E >= 1, got E = {}",
        solve.e()
    );
    let grid = solve.grid();
    let du = grid.diff_spectral(solve.u()).expect("solve vectors match grid");
    let lhs = integrate_density(
        grid,
        weights
            .mu
            .iter()
            .zip(solve.u())
            .zip(&du)
            .map(|((m, u), d)| m * (d.norm_sqr() + solve.e() * u.norm_sqr())),
    );
    let f2 = integrate_density(grid, solve.f().iter().map(|f| f.norm_sqr()));
    let fu = integrate_density(
        grid,
        solve
            .f()
            .iter()
            .zip(solve.u())
            .map(|(f, u)| (f * u.conj()).norm()),
    );
    let wchifu = integrate_density(
        grid,
        solve
            .w()
            .iter()
            .zip(&weights.chi)
            .zip(solve.f().iter().zip(solve.u()))
            .map(|((w, c), (f, u))| (w * c) * (f * u.conj()).norm()),
    );
    let q2d = solve.q().powf(2.0 * weights.delta);
    let rhs = (1.0 + q2d / solve.e()) * f2 + solve.q().sqrt() * (fu * wchifu).sqrt();
    CheckReport {
        name: "lemma-fuwfu",
        q: solve.q(),
        e: solve.e(),
        lhs,
        rhs,
        ratio: ratio_or_zero(lhs, rhs),
        slack: rhs - lhs,
        pass: true,
    }
}

/// Evaluates both sides of the elementary absorption implication: given the
/// premise `a + b <= c b^{1-theta} d^theta + e`, the conclusion is
/// `a + theta b <= theta c^{1/theta} d + e`. Returns whether the conclusion
/// holds (exact comparison; callers add slack as needed).
pub fn elem_implication(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    theta: f64,
) -> Result<bool, MultiplierError> {
    let (lhs, rhs) = elem_conclusion_sides(a, b, c, d, e, theta)?;
    Ok(lhs <= rhs)
}

/// `(a + theta b, theta c^{1/theta} d + e)`.
pub fn elem_conclusion_sides(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    theta: f64,
) -> Result<(f64, f64), MultiplierError> {
    for v in [a, b, c, d, e] {
        if v < 0.0 {
            return Err(MultiplierError::NegativeInput(v));
        }
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(MultiplierError::BadTheta(theta));
    }
    Ok((a + theta * b, theta * c.powf(1.0 / theta) * d + e))
}

/// `c b^{1-theta} d^theta + e`, the premise right-hand side.
pub fn elem_premise_rhs(b: f64, c: f64, d: f64, e: f64, theta: f64) -> f64 {
    c * b.powf(1.0 - theta) * d.powf(theta) + e
}

/// Forcing-support families mirroring the damped-region case analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingCase {
    /// Support inside the undamped region `|x| <= sigma`.
    Undamped,
    /// Support inside the transition layer `sigma <= |x| <= sigma + q^{-delta}`.
    Layer,
    /// Support in the damped bulk `|x| >= sigma + q^{-eta_N}`.
    Bulk,
    /// Annulus `sigma + q^{-eta_j} <= |x| <= sigma + q^{-eta_{j+1}}`.
    Annulus(usize),
    /// Complex Gaussian load on the whole circle.
    Random,
}

impl std::fmt::Display for ForcingCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ForcingCase::Undamped => write!(f, "undamped"),
            ForcingCase::Layer => write!(f, "layer"),
            ForcingCase::Bulk => write!(f, "bulk"),
            ForcingCase::Annulus(j) => write!(f, "annulus{j}"),
            ForcingCase::Random => write!(f, "random"),
        }
    }
}

/// The case list exercised by certification sweeps: the three structured
/// supports, interior annuli when the ladder has them, and a random load.
pub fn forcing_cases(beta: f64) -> Vec<ForcingCase> {
    let sched = eta_schedule(beta);
    let mut cases = vec![ForcingCase::Undamped, ForcingCase::Layer];
    for j in 0..sched.n_layers {
        cases.push(ForcingCase::Annulus(j));
    }
    cases.push(ForcingCase::Bulk);
    cases.push(ForcingCase::Random);
    cases
}

/// Complex Gaussian forcing restricted to the case's support.
pub fn forcing_vector(
    case: ForcingCase,
    grid: &CircleGrid,
    profile: &DampingProfile,
    q: f64,
    seed: u64,
) -> Vec<Complex64> {
    let d = delta(profile.beta());
    let s = profile.sigma();
    let sched = eta_schedule(profile.beta());
    let mut f = rng::complex_gaussian_vector(grid.n(), seed);
    let keep = |x: f64| -> bool {
        let ax = x.abs();
        match case {
            ForcingCase::Undamped => ax <= s,
            ForcingCase::Layer => ax >= s && ax <= s + q.powf(-d),
            ForcingCase::Bulk => ax >= s + q.powf(-sched.eta[sched.n_layers]),
            ForcingCase::Annulus(j) => {
                ax >= s + q.powf(-sched.eta[j]) && ax <= s + q.powf(-sched.eta[j + 1])
            }
            ForcingCase::Random => true,
        }
    };
    for (fj, &x) in f.iter_mut().zip(grid.nodes()) {
        if !keep(x) {
            *fj = Complex64::default();
        }
    }
    f
}
