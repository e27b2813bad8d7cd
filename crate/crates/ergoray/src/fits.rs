//! Least-squares fits on transformed coordinates, used to verify
//! asymptotic laws along integrated rays.
//!
//! Every fit reduces to ordinary least squares on a straight line after
//! a fixed coordinate transform: logarithms for exponential decay and
//! power laws, reciprocals for `1/x0` decay. Windows are chosen by the
//! caller as fixed fractions of the sample sequence so results are
//! reproducible; nothing here is adaptive.

use serde::Serialize;

/// Ordinary least-squares line through `(x, y)` pairs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of the linear model.
    pub r_squared: f64,
    pub n: usize,
}

/// Fit `y = slope * x + intercept`, skipping non-finite pairs.
/// Returns `None` with fewer than two distinct finite points.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    let n = pairs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in &pairs {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // r^2 = 1 - SSE/SST; constant data fits exactly.
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LineFit { slope, intercept, r_squared, n })
}

/// Fit `ln y = slope * ln x + c`, keeping only strictly positive pairs.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    line_fit(&lx, &ly)
}

/// Exponential-decay fit `gap ~ exp(-rate * t)` for a positive,
/// decaying quantity against a progress variable `t` that increases
/// along the leg. `rate > 0` means decay.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpDecayFit {
    pub rate: f64,
    pub log_amplitude: f64,
    pub r_squared: f64,
    pub n: usize,
}

pub fn exp_decay_fit(progress: &[f64], gaps: &[f64]) -> Option<ExpDecayFit> {
    let (ts, lg): (Vec<f64>, Vec<f64>) = progress
        .iter()
        .zip(gaps)
        .filter(|(_, g)| **g > 0.0)
        .map(|(t, g)| (*t, g.ln()))
        .unzip();
    let line = line_fit(&ts, &lg)?;
    Some(ExpDecayFit {
        rate: -line.slope,
        log_amplitude: line.intercept,
        r_squared: line.r_squared,
        n: line.n,
    })
}

/// Reciprocal fit `1/gap = slope * t + intercept`: a positive slope with
/// good linearity certifies `gap ~ 1/t` decay.
pub fn reciprocal_fit(progress: &[f64], gaps: &[f64]) -> Option<LineFit> {
    let (ts, inv): (Vec<f64>, Vec<f64>) = progress
        .iter()
        .zip(gaps)
        .filter(|(_, g)| **g > 0.0)
        .map(|(t, g)| (*t, 1.0 / g))
        .unzip();
    line_fit(&ts, &inv)
}

/// Finite-time power-law exponent from the speed/gap relation.
///
/// If `gap ~ |t* - t|^p` near a finite arrival time `t*`, then
/// `|d gap/dt| ~ gap^q` with `q = 1 - 1/p`, so a log-log fit of speed
/// against gap yields `q` without needing `t*` (whose estimate from a
/// terminal event is biased by the termination guard). Returns the
/// implied `p = 1/(1-q)` plus the underlying line fit.
pub fn power_exponent_fit(gaps: &[f64], speeds: &[f64]) -> Option<(f64, LineFit)> {
    let abs_speeds: Vec<f64> = speeds.iter().map(|v| v.abs()).collect();
    let line = log_log_fit(gaps, &abs_speeds)?;
    if line.slope >= 1.0 {
        return None; // not a finite-time law
    }
    Some((1.0 / (1.0 - line.slope), line))
}

/// Number of full turns accumulated by an unwrapped angle sequence.
pub fn winding_turns(phis: &[f64]) -> f64 {
    match (phis.first(), phis.last()) {
        (Some(a), Some(b)) => (b - a).abs() / std::f64::consts::TAU,
        _ => 0.0,
    }
}

/// Asymptotic law labels attached to fit records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitLaw {
    /// `gap ~ exp(-rate * t)`.
    ExpDecay,
    /// `gap ~ 1/t`.
    OneOverX0,
    /// `gap ~ |t* - t|^exponent` with finite arrival `t*`.
    FiniteTimePower,
    /// Angular speed diverging as a power of the radius.
    PhiLogDivergence,
}

impl FitLaw {
    pub fn name(&self) -> &'static str {
        match self {
            FitLaw::ExpDecay => "exp-decay",
            FitLaw::OneOverX0 => "one-over-x0",
            FitLaw::FiniteTimePower => "finite-time-power",
            FitLaw::PhiLogDivergence => "phi-divergence",
        }
    }
}

/// One fitted law over a sample window, as recorded in scenario
/// outcomes and serialized reports.
#[derive(Debug, Clone, Serialize)]
pub struct FitRecord {
    pub law: FitLaw,
    /// What was fitted, e.g. `"rho - rho_horizon"`.
    pub quantity: String,
    /// Decay rate per unit `x0` (exponential laws).
    pub rate: Option<f64>,
    /// Power-law exponent (power laws; log-log slope for divergences).
    pub exponent: Option<f64>,
    pub r_squared: f64,
    /// `x0` range of the fitted window.
    pub window_x0: (f64, f64),
    pub n_samples: usize,
    /// True when the window was truncated by a terminal crossing rather
    /// than by reaching the asymptotic regime.
    pub window_limited: bool,
}
