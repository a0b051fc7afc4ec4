//! Second-order coincidence correlation of the output ports.
//!
//! Coincidences are taken as the equal-time product of the two port
//! intensities of one term, `R = I_c·I_d`, which for a single pair is
//! `cos²(ζ − ξ − 2Δ)`. Ensemble curves average this over the pair
//! detunings; incoherent pairs give the baseline `1/2`.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::ensemble::{pairwise_sum, sample_detunings, EnsembleError, SamplingPlan, Spectrum, Term};
use crate::model::{output_intensities, PairSample, PhaseConfig, PhaseConvention};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error("grid is empty")]
    EmptyGrid,
    #[error("grid value at index {0} is not finite")]
    NonFiniteGrid(usize),
    #[error("tau grid must be strictly increasing (index {0})")]
    NonMonotoneGrid(usize),
    #[error("curve columns differ in length: {tau} tau, {mean} mean, {stderr} stderr")]
    LengthMismatch { tau: usize, mean: usize, stderr: usize },
    #[error("filtered runs need a band-pass spectrum with a positive center")]
    NotABand,
    #[error("N00N order must be at least 1")]
    ZeroOrder,
}

/// How a curve's values were produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    MonteCarlo { n: usize, seed: u64 },
    Quadrature { nodes: usize },
    Analytic,
    /// Ingested from a file.
    External,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::MonteCarlo { .. } => "mc",
            Method::Quadrature { .. } => "quad",
            Method::Analytic => "analytic",
            Method::External => "external",
        }
    }
}

impl From<SamplingPlan> for Method {
    fn from(plan: SamplingPlan) -> Self {
        match plan {
            SamplingPlan::MonteCarlo { n, seed } => Method::MonteCarlo { n, seed },
            SamplingPlan::Quadrature { nodes } => Method::Quadrature { nodes },
        }
    }
}

/// Provenance of a curve: method, phases and spectrum, when known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveMeta {
    pub method: Method,
    pub cfg: Option<PhaseConfig>,
    pub spectrum: Option<Spectrum>,
}

impl CurveMeta {
    pub fn external() -> Self {
        Self {
            method: Method::External,
            cfg: None,
            spectrum: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub tau: Vec<f64>,
    pub r_mean: Vec<f64>,
    pub r_stderr: Vec<f64>,
    pub meta: CurveMeta,
}

impl CorrelationCurve {
    pub fn new(
        tau: Vec<f64>,
        r_mean: Vec<f64>,
        r_stderr: Vec<f64>,
        meta: CurveMeta,
    ) -> Result<Self, CorrelationError> {
        if tau.len() != r_mean.len() || tau.len() != r_stderr.len() {
            return Err(CorrelationError::LengthMismatch {
                tau: tau.len(),
                mean: r_mean.len(),
                stderr: r_stderr.len(),
            });
        }
        check_tau_grid(&tau)?;
        Ok(Self {
            tau,
            r_mean,
            r_stderr,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Value at the grid point nearest to `tau`.
    pub fn value_near(&self, tau: f64) -> f64 {
        let k = self
            .tau
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - tau).abs().total_cmp(&(b.1 - tau).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.r_mean[k]
    }
}

pub(crate) fn check_tau_grid(tau: &[f64]) -> Result<(), CorrelationError> {
    if tau.is_empty() {
        return Err(CorrelationError::EmptyGrid);
    }
    check_finite(tau)?;
    if let Some(k) = tau.windows(2).position(|w| w[1] <= w[0]) {
        return Err(CorrelationError::NonMonotoneGrid(k + 1));
    }
    Ok(())
}

fn check_finite(grid: &[f64]) -> Result<(), CorrelationError> {
    if grid.is_empty() {
        return Err(CorrelationError::EmptyGrid);
    }
    match grid.iter().position(|t| !t.is_finite()) {
        Some(k) => Err(CorrelationError::NonFiniteGrid(k)),
        None => Ok(()),
    }
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let last = (steps - 1) as f64;
            (0..steps)
                .map(|k| {
                    let t = k as f64 / last;
                    lo * (1.0 - t) + hi * t
                })
                .collect()
        }
    }
}

/// Coincidence product of one term, `I_c·I_d` or `I_c'·I_d'`.
pub fn term_coincidence(term: Term, cfg: &PhaseConfig, delta_f: f64, tau: f64) -> f64 {
    let q = output_intensities(cfg, delta_f, tau);
    match term {
        Term::AB => q.i_c * q.i_d,
        Term::BA => q.i_c2 * q.i_d2,
    }
}

/// Per-pair coincidence `cos²(ζ − ξ − 2Δ)`.
pub fn pair_coincidence(cfg: &PhaseConfig, delta_f: f64, tau: f64) -> f64 {
    term_coincidence(Term::AB, cfg, delta_f, tau)
}

/// Mean and standard error of the coincidence at each delay.
///
/// Delays are evaluated in parallel; each delay reduces its samples with a
/// fixed pairwise order.
pub(crate) fn coincidence_over(
    term: Term,
    cfg: &PhaseConfig,
    samples: &[PairSample],
    monte_carlo: bool,
    tau_grid: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let stats: Vec<(f64, f64)> = tau_grid
        .par_iter()
        .map(|&tau| {
            let values: Vec<f64> = samples
                .iter()
                .map(|s| term_coincidence(term, cfg, s.delta_f, tau))
                .collect();
            let mean = pairwise_sum(0..n, |k| samples[k].weight * values[k]).clamp(0.0, 1.0);
            let stderr = if monte_carlo && n > 1 {
                let var = pairwise_sum(0..n, |k| samples[k].weight * (values[k] - mean).powi(2))
                    * n as f64
                    / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            (mean, stderr)
        })
        .collect();
    stats.into_iter().unzip()
}

/// Ensemble-averaged coincidence curve over a delay grid.
pub fn ensemble_coincidence(
    cfg: &PhaseConfig,
    spectrum: &Spectrum,
    plan: &SamplingPlan,
    tau_grid: &[f64],
) -> Result<CorrelationCurve, CorrelationError> {
    ensemble_term_coincidence(Term::AB, cfg, spectrum, plan, tau_grid)
}

/// As [`ensemble_coincidence`], for either entangled term.
pub fn ensemble_term_coincidence(
    term: Term,
    cfg: &PhaseConfig,
    spectrum: &Spectrum,
    plan: &SamplingPlan,
    tau_grid: &[f64],
) -> Result<CorrelationCurve, CorrelationError> {
    check_tau_grid(tau_grid)?;
    let samples = sample_detunings(spectrum, plan)?;
    let (r_mean, r_stderr) = coincidence_over(term, cfg, &samples, plan.is_monte_carlo(), tau_grid);
    Ok(CorrelationCurve {
        tau: tau_grid.to_vec(),
        r_mean,
        r_stderr,
        meta: CurveMeta {
            method: (*plan).into(),
            cfg: Some(*cfg),
            spectrum: Some(*spectrum),
        },
    })
}

fn envelope_rate(convention: PhaseConvention) -> f64 {
    // ⟨cos(4Δ)⟩ over N(0, σ²) is exp(−(4s)²σ²τ²/2) with s the phase scale
    let s = convention.scale();
    8.0 * s * s
}

/// Closed-form Gaussian average, `½ + ½·cos(2(ζ − ξ))·exp(−8σ²τ²)` with
/// the literal convention (`−32π²σ²τ²` with SI phases). Untruncated.
pub fn analytic_coincidence(cfg: &PhaseConfig, sigma: f64, tau: f64) -> f64 {
    let rate = envelope_rate(cfg.convention);
    0.5 + 0.5 * (2.0 * (cfg.zeta - cfg.xi)).cos() * (-rate * sigma * sigma * tau * tau).exp()
}

pub fn analytic_curve(
    cfg: &PhaseConfig,
    sigma: f64,
    tau_grid: &[f64],
) -> Result<CorrelationCurve, CorrelationError> {
    check_tau_grid(tau_grid)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(EnsembleError::InvalidSigma(sigma).into());
    }
    Ok(CorrelationCurve {
        tau: tau_grid.to_vec(),
        r_mean: tau_grid.iter().map(|&t| analytic_coincidence(cfg, sigma, t)).collect(),
        r_stderr: vec![0.0; tau_grid.len()],
        meta: CurveMeta {
            method: Method::Analytic,
            cfg: Some(*cfg),
            spectrum: Some(Spectrum::Gaussian {
                sigma,
                truncation: f64::INFINITY,
            }),
        },
    })
}

/// Closed-form average over a uniform two-sided band.
pub fn analytic_band_coincidence(cfg: &PhaseConfig, center: f64, width: f64, tau: f64) -> f64 {
    let lo = (center - 0.5 * width).max(0.0);
    let hi = center + 0.5 * width;
    let k = 4.0 * cfg.convention.scale() * tau;
    let mean_cos = if k == 0.0 {
        1.0
    } else {
        ((k * hi).sin() - (k * lo).sin()) / (k * (hi - lo))
    };
    0.5 + 0.5 * (2.0 * (cfg.zeta - cfg.xi)).cos() * mean_cos
}

/// Coincidence curve for a spectrally filtered ensemble.
///
/// The two bands at `±center` beat against each other, so the curve
/// oscillates with angular frequency `4·center` (literal convention) under
/// a `sinc` envelope set by the band width.
pub fn filtered_coincidence(
    cfg: &PhaseConfig,
    band: &Spectrum,
    plan: &SamplingPlan,
    tau_grid: &[f64],
) -> Result<CorrelationCurve, CorrelationError> {
    match band {
        Spectrum::BandPass { center, .. } if *center > 0.0 => {
            ensemble_coincidence(cfg, band, plan, tau_grid)
        }
        _ => Err(CorrelationError::NotABand),
    }
}

/// Coincidence against the control phase `ξ` at a fixed delay.
#[derive(Debug, Clone, PartialEq)]
pub struct XiSweep {
    pub xi: Vec<f64>,
    pub r_mean: Vec<f64>,
    pub r_stderr: Vec<f64>,
    pub meta: CurveMeta,
    pub tau: f64,
}

/// ξ sweep of the untruncated Gaussian closed form.
pub fn xi_sweep(
    zeta: f64,
    sigma: f64,
    convention: PhaseConvention,
    xi_grid: &[f64],
    tau: f64,
) -> Result<XiSweep, CorrelationError> {
    check_finite(xi_grid)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(EnsembleError::InvalidSigma(sigma).into());
    }
    let base = PhaseConfig::new(0.0, zeta).with_convention(convention);
    Ok(XiSweep {
        xi: xi_grid.to_vec(),
        r_mean: xi_grid
            .iter()
            .map(|&xi| analytic_coincidence(&PhaseConfig { xi, ..base }, sigma, tau))
            .collect(),
        r_stderr: vec![0.0; xi_grid.len()],
        meta: CurveMeta {
            method: Method::Analytic,
            cfg: Some(base),
            spectrum: Some(Spectrum::Gaussian {
                sigma,
                truncation: f64::INFINITY,
            }),
        },
        tau,
    })
}

/// ξ sweep evaluated over a sampled ensemble. The samples are drawn once
/// and shared by every grid point.
pub fn xi_sweep_ensemble(
    zeta: f64,
    convention: PhaseConvention,
    spectrum: &Spectrum,
    plan: &SamplingPlan,
    xi_grid: &[f64],
    tau: f64,
) -> Result<XiSweep, CorrelationError> {
    check_finite(xi_grid)?;
    let samples = sample_detunings(spectrum, plan)?;
    let base = PhaseConfig::new(0.0, zeta).with_convention(convention);
    let (r_mean, r_stderr): (Vec<f64>, Vec<f64>) = xi_grid
        .iter()
        .map(|&xi| {
            let (m, s) = coincidence_over(
                Term::AB,
                &PhaseConfig { xi, ..base },
                &samples,
                plan.is_monte_carlo(),
                &[tau],
            );
            (m[0], s[0])
        })
        .unzip();
    Ok(XiSweep {
        xi: xi_grid.to_vec(),
        r_mean,
        r_stderr,
        meta: CurveMeta {
            method: (*plan).into(),
            cfg: Some(base),
            spectrum: Some(*spectrum),
        },
        tau,
    })
}

/// N-th order correlation of a N00N state, `(1 + cos Nφ)/2`.
pub fn noon_correlation(n: u32, phi: f64) -> Result<f64, CorrelationError> {
    if n == 0 {
        return Err(CorrelationError::ZeroOrder);
    }
    Ok(0.5 * (1.0 + (n as f64 * phi).cos()))
}

/// Beat angular frequency in delay of a band centered at `center`.
pub fn beat_angular_frequency(center: f64, convention: PhaseConvention) -> f64 {
    4.0 * convention.scale() * center
}

/// Spacing in delay between consecutive extrema of a filtered curve.
pub fn beat_extrema_spacing(center: f64, convention: PhaseConvention) -> f64 {
    PI / beat_angular_frequency(center, convention)
}
