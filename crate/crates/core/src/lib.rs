//! Coherence-model simulator for phase-controlled Hong-Ou-Mandel
//! interference.
//!
//! A photon pair is split into its two path-entangled terms, each term is
//! propagated through a lossless 50/50 beam splitter, and port intensities
//! and coincidence products are averaged over an SPDC detuning spectrum.
//!
//! - [`model`]: per-pair fields, intensities and phase bookkeeping
//! - [`ensemble`]: spectra, sampling plans, ensemble port intensities
//! - [`correlation`]: coincidence curves, closed forms, ξ sweeps, N00N
//! - [`analysis`]: dip/peak metrics and envelope fitting
//! - [`csv`]: file format
//! - [`cli`]: command-line front end

pub mod analysis;
pub mod cli;
pub mod correlation;
pub mod csv;
pub mod ensemble;
pub mod model;

pub use analysis::{curve_metrics, fit_gaussian_envelope, AnalysisError, CurveMetrics, FeatureKind, FitResult};
pub use correlation::{
    analytic_coincidence, ensemble_coincidence, filtered_coincidence, noon_correlation,
    pair_coincidence, xi_sweep, CorrelationCurve, CorrelationError, CurveMeta, Method, XiSweep,
};
pub use ensemble::{
    mean_port_intensities, sample_detunings, single_term_intensity, EnsembleError, SamplingPlan,
    Spectrum, Term,
};
pub use model::{
    bs_transform, detuning_phase, output_fields, output_intensities, phase_ledger,
    ComplexAmplitude, FieldQuad, IntensityQuad, ModelError, PairSample, PhaseConfig,
    PhaseConvention, PhaseLedger, ZetaBranch,
};
