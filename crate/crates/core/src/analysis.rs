//! Dip/peak metrics and Gaussian-envelope fitting of coincidence curves.
//!
//! The fit model is `R(τ) = b + a·exp(−c·τ²)`, the shape of the
//! closed-form Gaussian average: `b = ½`, `a = ½cos(2(ζ − ξ))` and
//! `c = 8σ²` under the literal phase convention.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::correlation::CorrelationCurve;

const MIN_METRIC_POINTS: usize = 5;
const MIN_FIT_POINTS: usize = 8;
const KIND_EPS: f64 = 1e-6;
const DEGENERATE_AMPLITUDE: f64 = 1e-9;
const MAX_ITERATIONS: usize = 100;
const STEP_TOL: f64 = 1e-10;
const LAMBDA_START: f64 = 1e-3;
const LAMBDA_SHRINK: f64 = 0.3;
const LAMBDA_GROW: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("curve has {got} points, need at least {need}")]
    TooShort { got: usize, need: usize },
    #[error("curve value at index {0} is not finite")]
    NonFinite(usize),
    #[error("half-maximum crossing not found on the {0} side of the extremum; widen the grid")]
    UnresolvedWidth(&'static str),
    #[error("curve is flat (initial amplitude {0:e}); nothing to fit")]
    Degenerate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Dip,
    Peak,
    Flat,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Dip => "dip",
            FeatureKind::Peak => "peak",
            FeatureKind::Flat => "flat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveMetrics {
    pub baseline: f64,
    /// Value at the point of largest deviation from the baseline.
    pub extremum: f64,
    pub tau_extremum: f64,
    pub visibility: f64,
    /// Full width at half deviation, in seconds.
    pub fwhm: f64,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub baseline: f64,
    /// Signed; negative for a dip.
    pub amplitude: f64,
    /// Envelope rate `c` in `exp(−c·τ²)`, s⁻².
    pub rate: f64,
    pub rms_residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn check_values(tau: &[f64], r: &[f64], need: usize) -> Result<(), AnalysisError> {
    if tau.len() < need {
        return Err(AnalysisError::TooShort {
            got: tau.len(),
            need,
        });
    }
    if let Some(k) = tau
        .iter()
        .zip(r)
        .position(|(t, v)| !t.is_finite() || !v.is_finite())
    {
        return Err(AnalysisError::NonFinite(k));
    }
    Ok(())
}

/// Baseline, extremum, visibility and width of a dip or peak.
///
/// The baseline is the mean of the outer 10% of points on each side.
pub fn curve_metrics(curve: &CorrelationCurve) -> Result<CurveMetrics, AnalysisError> {
    metrics_of(&curve.tau, &curve.r_mean)
}

pub fn metrics_of(tau: &[f64], r: &[f64]) -> Result<CurveMetrics, AnalysisError> {
    check_values(tau, r, MIN_METRIC_POINTS)?;
    let n = r.len();
    let (baseline, k_ext, extremum) = baseline_and_extremum(r);
    let deviation = extremum - baseline;
    let kind = if deviation < -KIND_EPS {
        FeatureKind::Dip
    } else if deviation > KIND_EPS {
        FeatureKind::Peak
    } else {
        FeatureKind::Flat
    };
    let visibility = if baseline > 0.0 {
        deviation.abs() / baseline
    } else {
        0.0
    };

    let fwhm = if kind == FeatureKind::Flat {
        0.0
    } else {
        let half = baseline + 0.5 * deviation;
        // distance above the half level, positive inside the feature
        let inside = |k: usize| (r[k] - half) * deviation.signum();
        let left = (1..=k_ext)
            .rev()
            .find(|&k| inside(k - 1) <= 0.0)
            .map(|k| cross(tau[k - 1], r[k - 1], tau[k], r[k], half))
            .ok_or(AnalysisError::UnresolvedWidth("left"))?;
        let right = (k_ext..n - 1)
            .find(|&k| inside(k + 1) <= 0.0)
            .map(|k| cross(tau[k], r[k], tau[k + 1], r[k + 1], half))
            .ok_or(AnalysisError::UnresolvedWidth("right"))?;
        right - left
    };

    Ok(CurveMetrics {
        baseline,
        extremum,
        tau_extremum: tau[k_ext],
        visibility,
        fwhm,
        kind,
    })
}

fn cross(t0: f64, r0: f64, t1: f64, r1: f64, level: f64) -> f64 {
    if r1 == r0 {
        return t1;
    }
    t0 + (level - r0) * (t1 - t0) / (r1 - r0)
}

/// Least-squares fit of `b + a·exp(−c·τ²)`.
///
/// Starts from [`curve_metrics`] and refines with Levenberg-damped
/// Gauss–Newton. A fit that hits the iteration cap or a singular system
/// comes back with `converged = false` and the best iterate.
pub fn fit_gaussian_envelope(curve: &CorrelationCurve) -> Result<FitResult, AnalysisError> {
    fit_points(&curve.tau, &curve.r_mean)
}

pub fn fit_points(tau: &[f64], r: &[f64]) -> Result<FitResult, AnalysisError> {
    check_values(tau, r, MIN_FIT_POINTS)?;
    let m = match metrics_of(tau, r) {
        Ok(m) => m,
        // an envelope wider than the grid can still be fitted
        Err(AnalysisError::UnresolvedWidth(_)) => {
            let (baseline, k, extremum) = baseline_and_extremum(r);
            CurveMetrics {
                baseline,
                extremum,
                tau_extremum: tau[k],
                visibility: 0.0,
                fwhm: 0.0,
                kind: FeatureKind::Flat,
            }
        }
        Err(e) => return Err(e),
    };
    let a0 = m.extremum - m.baseline;
    if a0.abs() < DEGENERATE_AMPLITUDE {
        return Err(AnalysisError::Degenerate(a0));
    }
    let span = tau.iter().fold(0.0f64, |acc, t| acc.max((t - m.tau_extremum).abs()));
    let c0 = if m.fwhm > 0.0 {
        4.0 * std::f64::consts::LN_2 / (m.fwhm * m.fwhm)
    } else {
        16.0 / (span * span)
    };

    // work in u = τ·√c0 so the rate parameter is O(1)
    let scale = c0.sqrt();
    let u: Vec<f64> = tau.iter().map(|t| t * scale).collect();
    let mut p = Vector3::new(m.baseline, a0, 1.0);
    let mut cost = sum_sq(&u, r, &p);
    let mut lambda = LAMBDA_START;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&u, r, &p);
        let damped = jtj + Matrix3::identity() * lambda;
        let Some(step) = damped.lu().solve(&(-jtr)) else {
            break;
        };
        if !step.iter().all(|s| s.is_finite()) {
            break;
        }
        let trial = p + step;
        let trial_cost = sum_sq(&u, r, &trial);
        let small = step.norm() <= STEP_TOL * p.norm().max(f64::MIN_POSITIVE);
        if trial_cost <= cost && trial[2] > 0.0 {
            p = trial;
            cost = trial_cost;
            lambda *= LAMBDA_SHRINK;
        } else {
            lambda *= LAMBDA_GROW;
        }
        if small {
            converged = true;
            break;
        }
    }

    let rate = p[2] * c0;
    Ok(FitResult {
        baseline: p[0],
        amplitude: p[1],
        rate,
        rms_residual: (cost / r.len() as f64).sqrt(),
        converged: converged && rate > 0.0,
        iterations,
    })
}

fn baseline_and_extremum(r: &[f64]) -> (f64, usize, f64) {
    let n = r.len();
    let tail = (n / 10).max(1);
    let baseline = r[..tail].iter().chain(&r[n - tail..]).sum::<f64>() / (2 * tail) as f64;
    let (k, &extremum) = r
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1 - baseline).abs().total_cmp(&(b.1 - baseline).abs()))
        .expect("non-empty");
    (baseline, k, extremum)
}

fn model(u: f64, p: &Vector3<f64>) -> f64 {
    p[0] + p[1] * (-p[2] * u * u).exp()
}

fn sum_sq(u: &[f64], r: &[f64], p: &Vector3<f64>) -> f64 {
    u.iter().zip(r).map(|(&x, &y)| (model(x, p) - y).powi(2)).sum()
}

fn normal_equations(u: &[f64], r: &[f64], p: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    for (&x, &y) in u.iter().zip(r) {
        let e = (-p[2] * x * x).exp();
        let j = Vector3::new(1.0, e, -p[1] * x * x * e);
        let res = p[0] + p[1] * e - y;
        jtj += j * j.transpose();
        jtr += j * res;
    }
    (jtj, jtr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{analytic_curve, linspace, CurveMeta};
    use crate::model::PhaseConfig;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn curve(tau: Vec<f64>, r: Vec<f64>) -> CorrelationCurve {
        let n = tau.len();
        CorrelationCurve::new(tau, r, vec![0.0; n], CurveMeta::external()).unwrap()
    }

    fn analytic(xi: f64) -> CorrelationCurve {
        let sigma = 1e9;
        analytic_curve(&PhaseConfig::new(xi, FRAC_PI_2), sigma, &linspace(-10.0 / sigma, 10.0 / sigma, 201)).unwrap()
    }

    #[test]
    fn metrics_of_dip() {
        let m = curve_metrics(&analytic(0.0)).unwrap();
        assert_eq!(m.kind, FeatureKind::Dip);
        assert_relative_eq!(m.visibility, 1.0, epsilon = 1e-3);
        assert_eq!(m.tau_extremum, 0.0);
    }

    #[test]
    fn metrics_of_peak_width() {
        let m = curve_metrics(&analytic(FRAC_PI_2)).unwrap();
        assert_eq!(m.kind, FeatureKind::Peak);
        let expect = 2.0 * (std::f64::consts::LN_2 / (8.0 * 1e18)).sqrt();
        assert_relative_eq!(m.fwhm, expect, max_relative = 0.01);
    }

    #[test]
    fn metrics_of_flat() {
        let t = linspace(-1.0, 1.0, 11);
        let m = curve_metrics(&curve(t, vec![0.5; 11])).unwrap();
        assert_eq!(m.kind, FeatureKind::Flat);
        assert_eq!(m.visibility, 0.0);
        assert_eq!(m.fwhm, 0.0);
    }

    #[test]
    fn metrics_errors() {
        let t = linspace(0.0, 1.0, 4);
        assert_eq!(
            curve_metrics(&curve(t, vec![0.5; 4])),
            Err(AnalysisError::TooShort { got: 4, need: 5 })
        );
        let t = linspace(0.0, 1.0, 6);
        let mut r = vec![0.5; 6];
        r[3] = f64::NAN;
        assert_eq!(curve_metrics(&curve(t, r)), Err(AnalysisError::NonFinite(3)));
    }

    #[test]
    fn fit_recovers_noiseless_dip() {
        let f = fit_gaussian_envelope(&analytic(0.0)).unwrap();
        assert!(f.converged);
        assert_relative_eq!(f.baseline, 0.5, max_relative = 1e-3);
        assert_relative_eq!(f.amplitude, -0.5, max_relative = 1e-3);
        assert_relative_eq!(f.rate, 8e18, max_relative = 1e-3);
        assert!(f.rms_residual < 1e-8);
    }

    #[test]
    fn fit_rejects_flat() {
        let t = linspace(-1.0, 1.0, 21);
        assert!(matches!(
            fit_gaussian_envelope(&curve(t, vec![0.5; 21])),
            Err(AnalysisError::Degenerate(_))
        ));
    }

    #[test]
    fn fit_needs_eight_points() {
        let t = linspace(-1.0, 1.0, 7);
        let r: Vec<f64> = t.iter().map(|x| 0.5 - 0.5 * (-x * x).exp()).collect();
        assert_eq!(
            fit_gaussian_envelope(&curve(t, r)),
            Err(AnalysisError::TooShort { got: 7, need: 8 })
        );
    }

    #[test]
    fn fit_round_trip_over_xi() {
        for k in 0..=4 {
            let xi = k as f64 * std::f64::consts::FRAC_PI_8;
            let expect_a = 0.5 * (2.0 * (FRAC_PI_2 - xi)).cos();
            let c = analytic(xi);
            match fit_gaussian_envelope(&c) {
                Ok(f) => {
                    assert!(expect_a.abs() >= 1e-3, "xi = {xi}");
                    assert!(f.converged);
                    assert_relative_eq!(f.amplitude, expect_a, max_relative = 1e-3);
                    assert_relative_eq!(f.rate, 8e18, max_relative = 1e-3);
                    assert!(f.rms_residual < 1e-8);
                    let m = curve_metrics(&c).unwrap();
                    let kind = if f.amplitude < 0.0 { FeatureKind::Dip } else { FeatureKind::Peak };
                    assert_eq!(m.kind, kind);
                }
                Err(AnalysisError::Degenerate(_)) => assert!(expect_a.abs() < 1e-3, "xi = {xi}"),
                Err(e) => panic!("unexpected {e}"),
            }
        }
    }

    #[test]
    fn fit_handles_envelope_wider_than_grid() {
        // the wings never reach the true baseline
        let t = linspace(-1.0, 1.0, 41);
        let r: Vec<f64> = t.iter().map(|x| 0.5 + 0.3 * (-0.2 * x * x).exp()).collect();
        let f = fit_gaussian_envelope(&curve(t, r)).unwrap();
        assert!(f.converged);
        assert_relative_eq!(f.rate, 0.2, max_relative = 1e-6);
    }
}
