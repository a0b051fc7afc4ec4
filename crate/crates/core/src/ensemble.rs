//! Detuning spectra, sampling plans and ensemble-averaged port intensities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{output_intensities, PairSample, PhaseConfig};

pub const DEFAULT_TRUNCATION: f64 = 3.0;
pub const DEFAULT_NODES: usize = 2001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("truncation must be positive and finite, got {0}")]
    InvalidTruncation(f64),
    #[error("band width must be positive and finite, got {0}")]
    InvalidWidth(f64),
    #[error("band center must be non-negative and finite, got {0}")]
    InvalidCenter(f64),
    #[error("quadrature needs an odd node count of at least 3, got {0}")]
    InvalidNodes(usize),
    #[error("Monte Carlo needs at least one sample")]
    ZeroSamples,
}

/// Distribution of signal detunings `δf` (the idler sits at `−δf`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spectrum {
    /// Zero-mean normal with standard deviation `sigma` (Hz), cut at
    /// `±truncation·sigma`.
    Gaussian { sigma: f64, truncation: f64 },
    /// Two symmetric bands selecting `| |δf| − center | ≤ width/2`.
    BandPass { center: f64, width: f64 },
}

impl Spectrum {
    pub fn gaussian(sigma: f64) -> Self {
        Spectrum::Gaussian {
            sigma,
            truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn band_pass(center: f64, width: f64) -> Self {
        Spectrum::BandPass { center, width }
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        match *self {
            Spectrum::Gaussian { sigma, truncation } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(EnsembleError::InvalidSigma(sigma));
                }
                if !(truncation.is_finite() && truncation > 0.0) {
                    return Err(EnsembleError::InvalidTruncation(truncation));
                }
            }
            Spectrum::BandPass { center, width } => {
                if !(width.is_finite() && width > 0.0) {
                    return Err(EnsembleError::InvalidWidth(width));
                }
                if !(center.is_finite() && center >= 0.0) {
                    return Err(EnsembleError::InvalidCenter(center));
                }
            }
        }
        Ok(())
    }

    /// Range of `|δf|` covered by a band.
    fn band_edges(center: f64, width: f64) -> (f64, f64) {
        ((center - 0.5 * width).max(0.0), center + 0.5 * width)
    }
}

/// How the ensemble average is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplingPlan {
    MonteCarlo { n: usize, seed: u64 },
    Quadrature { nodes: usize },
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan::Quadrature {
            nodes: DEFAULT_NODES,
        }
    }
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        match *self {
            SamplingPlan::MonteCarlo { n, .. } if n == 0 => Err(EnsembleError::ZeroSamples),
            SamplingPlan::Quadrature { nodes } if nodes < 3 || nodes % 2 == 0 => {
                Err(EnsembleError::InvalidNodes(nodes))
            }
            _ => Ok(()),
        }
    }

    pub fn is_monte_carlo(&self) -> bool {
        matches!(self, SamplingPlan::MonteCarlo { .. })
    }
}

/// Draws or lays out the pair detunings of an ensemble.
///
/// Monte Carlo draws are keyed on `(seed, index)`: sample `i` comes from
/// its own ChaCha stream, so the list does not depend on how the work is
/// split across threads. Quadrature uses equally spaced nodes weighted by
/// the spectral density.
pub fn sample_detunings(
    spectrum: &Spectrum,
    plan: &SamplingPlan,
) -> Result<Vec<PairSample>, EnsembleError> {
    spectrum.validate()?;
    plan.validate()?;
    Ok(match *plan {
        SamplingPlan::MonteCarlo { n, seed } => monte_carlo(spectrum, n, seed),
        SamplingPlan::Quadrature { nodes } => quadrature(spectrum, nodes),
    })
}

fn monte_carlo(spectrum: &Spectrum, n: usize, seed: u64) -> Vec<PairSample> {
    let base = ChaCha8Rng::seed_from_u64(seed);
    let weight = 1.0 / n as f64;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = base.clone();
            rng.set_stream(i as u64);
            PairSample {
                delta_f: draw(spectrum, &mut rng),
                weight,
            }
        })
        .collect()
}

fn draw(spectrum: &Spectrum, rng: &mut ChaCha8Rng) -> f64 {
    match *spectrum {
        Spectrum::Gaussian { sigma, truncation } => loop {
            let z: f64 = rng.sample(StandardNormal);
            if z.abs() <= truncation {
                break sigma * z;
            }
        },
        Spectrum::BandPass { center, width } => {
            let (lo, hi) = Spectrum::band_edges(center, width);
            let magnitude = lo + (hi - lo) * rng.random::<f64>();
            if rng.random::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        }
    }
}

fn quadrature(spectrum: &Spectrum, nodes: usize) -> Vec<PairSample> {
    match *spectrum {
        Spectrum::Gaussian { sigma, truncation } => {
            let last = (nodes - 1) as f64;
            // integer-symmetric numerator keeps ±x bit-identical and 0 exact
            let scaled: Vec<f64> = (0..nodes)
                .map(|k| truncation * (2.0 * k as f64 - last) / last)
                .collect();
            let density: Vec<f64> = scaled.iter().map(|u| (-0.5 * u * u).exp()).collect();
            let total = pairwise_sum(0..nodes, |k| density[k]);
            scaled
                .iter()
                .zip(&density)
                .map(|(u, d)| PairSample {
                    delta_f: sigma * u,
                    weight: d / total,
                })
                .collect()
        }
        Spectrum::BandPass { center, width } => {
            // midpoint cells; the odd count puts a node at the band center
            let (lo, hi) = Spectrum::band_edges(center, width);
            let weight = 0.5 / nodes as f64;
            let positive: Vec<f64> = (0..nodes)
                .map(|k| lo + (hi - lo) * ((k as f64 + 0.5) / nodes as f64))
                .collect();
            positive
                .iter()
                .rev()
                .map(|&f| -f)
                .chain(positive.iter().copied())
                .map(|delta_f| PairSample { delta_f, weight })
                .collect()
        }
    }
}

/// Which path-entangled term of the pair state is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    /// Signal in `a`, idler in `b`.
    AB,
    /// Swapped term.
    BA,
}

/// Ensemble mean of each port's intensity with both terms present.
///
/// Each pair contributes `(i_c + i_c')/2` and `(i_d + i_d')/2`; the sine
/// parts cancel inside every pair, so both means are 1.
pub fn mean_port_intensities(
    cfg: &PhaseConfig,
    spectrum: &Spectrum,
    plan: &SamplingPlan,
    tau: f64,
) -> Result<(f64, f64), EnsembleError> {
    let samples = sample_detunings(spectrum, plan)?;
    Ok(mean_port_intensities_over(cfg, &samples, tau))
}

pub fn mean_port_intensities_over(cfg: &PhaseConfig, samples: &[PairSample], tau: f64) -> (f64, f64) {
    let quads: Vec<_> = samples
        .iter()
        .map(|s| (s.weight, output_intensities(cfg, s.delta_f, tau)))
        .collect();
    let c = pairwise_sum(0..quads.len(), |k| quads[k].0 * 0.5 * (quads[k].1.i_c + quads[k].1.i_c2));
    let d = pairwise_sum(0..quads.len(), |k| quads[k].0 * 0.5 * (quads[k].1.i_d + quads[k].1.i_d2));
    (c, d)
}

/// Ensemble mean port intensities when only one term is generated.
pub fn single_term_intensity(
    term: Term,
    cfg: &PhaseConfig,
    spectrum: &Spectrum,
    plan: &SamplingPlan,
    tau: f64,
) -> Result<(f64, f64), EnsembleError> {
    let samples = sample_detunings(spectrum, plan)?;
    let port = |k: usize| {
        let q = output_intensities(cfg, samples[k].delta_f, tau);
        match term {
            Term::AB => (q.i_c, q.i_d),
            Term::BA => (q.i_c2, q.i_d2),
        }
    };
    let c = pairwise_sum(0..samples.len(), |k| samples[k].weight * port(k).0);
    let d = pairwise_sum(0..samples.len(), |k| samples[k].weight * port(k).1);
    Ok((c, d))
}

const PAIRWISE_BLOCK: usize = 64;

/// Pairwise summation of `f(i)` over an index range. The split points
/// depend only on the range, so the result is reproducible bit for bit.
pub(crate) fn pairwise_sum<F>(range: std::ops::Range<usize>, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    fn go<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= PAIRWISE_BLOCK {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, f) + go(mid, hi, f)
        }
    }
    go(range.start, range.end, &f)
}
