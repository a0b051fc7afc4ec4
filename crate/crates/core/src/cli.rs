//! Command-line front end.
//!
//! Exit status: 0 success, 1 I/O or unusable input, 2 usage, 3 degenerate
//! fit.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::analysis::{fit_gaussian_envelope, AnalysisError, FitResult};
use crate::correlation::{
    analytic_band_coincidence, analytic_curve, ensemble_coincidence, filtered_coincidence,
    linspace, noon_correlation, xi_sweep, xi_sweep_ensemble, CorrelationCurve, CorrelationError,
    CurveMeta, Method, XiSweep,
};
use crate::csv::{read_csv, render, write_csv, CsvError, Table};
use crate::ensemble::{SamplingPlan, Spectrum, DEFAULT_NODES, DEFAULT_TRUNCATION};
use crate::model::{PhaseConfig, PhaseConvention};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "biphoton-hom", version, about = "Phase-controlled Hong-Ou-Mandel coincidence simulator")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Coincidence against delay over a Gaussian spectrum.
    SweepTau(TauArgs),
    /// Coincidence against the control phase xi at a fixed delay.
    SweepXi(XiArgs),
    /// Coincidence against delay for a two-sided band-pass spectrum.
    Filtered(FilteredArgs),
    /// N00N-state correlation (1 + cos N phi)/2.
    Noon(NoonArgs),
    /// Fit b + a*exp(-c*tau^2) to a delay curve.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    Mc,
    Quad,
    Analytic,
}

#[derive(Debug, Args)]
struct PhaseArgs {
    /// Control phase at input a, radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    xi: f64,
    /// Idler phase relative to the signal, radians.
    #[arg(long, default_value_t = FRAC_PI_2, allow_hyphen_values = true)]
    zeta: f64,
    /// Detuning-to-phase convention: paper (δf·τ) or si (2π·δf·τ).
    #[arg(long, default_value = "paper")]
    convention: PhaseConvention,
}

#[derive(Debug, Args)]
struct SamplingArgs {
    #[arg(long, value_enum, default_value = "quad")]
    method: MethodChoice,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Monte Carlo seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Quadrature node count (odd, >= 3).
    #[arg(long, default_value_t = DEFAULT_NODES)]
    nodes: usize,
}

#[derive(Debug, Args)]
struct DelayArgs {
    /// First delay, seconds.
    #[arg(long = "tau-min", default_value_t = -5e-9, allow_hyphen_values = true)]
    tau_min: f64,
    /// Last delay, seconds.
    #[arg(long = "tau-max", default_value_t = 5e-9, allow_hyphen_values = true)]
    tau_max: f64,
    /// Number of grid points, including both ends.
    #[arg(long, default_value_t = 201)]
    steps: usize,
}

#[derive(Debug, Args)]
struct TauArgs {
    #[command(flatten)]
    phase: PhaseArgs,
    /// Spectral standard deviation, Hz.
    #[arg(long, default_value_t = 1e9, allow_hyphen_values = true)]
    sigma: f64,
    /// Truncation of the Gaussian, in multiples of sigma.
    #[arg(long, default_value_t = DEFAULT_TRUNCATION, allow_hyphen_values = true)]
    truncation: f64,
    #[command(flatten)]
    delay: DelayArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Output CSV path; stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FilteredArgs {
    #[command(flatten)]
    phase: PhaseArgs,
    /// Band center offset from the degenerate frequency, Hz.
    #[arg(long = "filter-center", allow_hyphen_values = true)]
    filter_center: Option<f64>,
    /// Full width of each band, Hz.
    #[arg(long = "filter-width", allow_hyphen_values = true)]
    filter_width: Option<f64>,
    #[command(flatten)]
    delay: DelayArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Output CSV path; stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct XiArgs {
    #[arg(long, default_value_t = FRAC_PI_2, allow_hyphen_values = true)]
    zeta: f64,
    #[arg(long, default_value = "paper")]
    convention: PhaseConvention,
    #[arg(long, default_value_t = 1e9, allow_hyphen_values = true)]
    sigma: f64,
    #[arg(long, default_value_t = DEFAULT_TRUNCATION, allow_hyphen_values = true)]
    truncation: f64,
    #[arg(long = "xi-min", default_value_t = 0.0, allow_hyphen_values = true)]
    xi_min: f64,
    #[arg(long = "xi-max", default_value_t = FRAC_PI_2, allow_hyphen_values = true)]
    xi_max: f64,
    /// Number of grid points, including both ends.
    #[arg(long, default_value_t = 201)]
    steps: usize,
    /// Fixed delay, seconds.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    tau: f64,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Output CSV path; stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NoonArgs {
    #[arg(long, default_value_t = 2)]
    n: u32,
    #[arg(long = "phi-min", default_value_t = 0.0, allow_hyphen_values = true)]
    phi_min: f64,
    #[arg(long = "phi-max", default_value_t = TAU, allow_hyphen_values = true)]
    phi_max: f64,
    #[arg(long, default_value_t = 101)]
    steps: usize,
    /// Output CSV path; stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Optional CSV report.
    /// Output CSV path; stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// How an ensemble average is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    Analytic,
    Sampled(SamplingPlan),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayGrid {
    pub tau_min: f64,
    pub tau_max: f64,
    pub steps: usize,
}

impl DelayGrid {
    pub fn points(&self) -> Vec<f64> {
        linspace(self.tau_min, self.tau_max, self.steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    SweepTau {
        cfg: PhaseConfig,
        spectrum: Spectrum,
        evaluation: Evaluation,
        grid: DelayGrid,
    },
    Filtered {
        cfg: PhaseConfig,
        band: Spectrum,
        evaluation: Evaluation,
        grid: DelayGrid,
    },
    SweepXi {
        zeta: f64,
        convention: PhaseConvention,
        spectrum: Spectrum,
        evaluation: Evaluation,
        xi_min: f64,
        xi_max: f64,
        steps: usize,
        tau: f64,
    },
    Noon {
        n: u32,
        phi_min: f64,
        phi_max: f64,
        steps: usize,
    },
    Fit {
        input: PathBuf,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::SweepTau { .. } => "sweep-tau",
            Task::Filtered { .. } => "filtered",
            Task::SweepXi { .. } => "sweep-xi",
            Task::Noon { .. } => "noon",
            Task::Fit { .. } => "fit",
        }
    }
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error("invalid value for `{flag}`: {msg}")]
    Invalid { flag: &'static str, msg: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) if !e.use_stderr() => EXIT_OK,
            _ => EXIT_USAGE,
        }
    }

    /// Prints the diagnostic (or help text) to the right stream.
    pub fn print(&self) {
        match self {
            CliError::Usage(e) => {
                let _ = e.print();
            }
            other => eprintln!("error: {other}\n\nFor more information, try '--help'."),
        }
    }
}

fn invalid(flag: &'static str, msg: impl Into<String>) -> CliError {
    CliError::Invalid {
        flag,
        msg: msg.into(),
    }
}

fn check_steps(steps: usize) -> Result<(), CliError> {
    if steps < 2 {
        return Err(invalid("--steps", format!("need at least 2 points, got {steps}")));
    }
    Ok(())
}

fn check_range(lo: f64, hi: f64, flag: &'static str) -> Result<(), CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(invalid(flag, format!("range [{lo}, {hi}] must be finite and increasing")));
    }
    Ok(())
}

fn check_finite(v: f64, flag: &'static str) -> Result<(), CliError> {
    if !v.is_finite() {
        return Err(invalid(flag, format!("{v} is not finite")));
    }
    Ok(())
}

fn evaluation(s: &SamplingArgs) -> Result<Evaluation, CliError> {
    match s.method {
        MethodChoice::Analytic => Ok(Evaluation::Analytic),
        MethodChoice::Mc => {
            if s.samples < 1 {
                return Err(invalid("--samples", "Monte Carlo needs at least 1 sample"));
            }
            Ok(Evaluation::Sampled(SamplingPlan::MonteCarlo {
                n: s.samples,
                seed: s.seed,
            }))
        }
        MethodChoice::Quad => {
            if s.nodes < 3 || s.nodes % 2 == 0 {
                return Err(invalid("--nodes", format!("need an odd count of at least 3, got {}", s.nodes)));
            }
            Ok(Evaluation::Sampled(SamplingPlan::Quadrature { nodes: s.nodes }))
        }
    }
}

fn gaussian(sigma: f64, truncation: f64) -> Result<Spectrum, CliError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid("--sigma", format!("must be positive, got {sigma}")));
    }
    if !(truncation.is_finite() && truncation > 0.0) {
        return Err(invalid("--truncation", format!("must be positive, got {truncation}")));
    }
    Ok(Spectrum::Gaussian { sigma, truncation })
}

fn phase_config(p: &PhaseArgs) -> Result<PhaseConfig, CliError> {
    check_finite(p.xi, "--xi")?;
    check_finite(p.zeta, "--zeta")?;
    Ok(PhaseConfig::new(p.xi, p.zeta).with_convention(p.convention))
}

fn delay_grid(d: &DelayArgs) -> Result<DelayGrid, CliError> {
    check_steps(d.steps)?;
    check_range(d.tau_min, d.tau_max, "--tau-min")?;
    Ok(DelayGrid {
        tau_min: d.tau_min,
        tau_max: d.tau_max,
        steps: d.steps,
    })
}

/// Parses and validates a full argument vector (program name first).
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (task, output) = match cli.command {
        CliCommand::SweepTau(a) => (
            Task::SweepTau {
                cfg: phase_config(&a.phase)?,
                spectrum: gaussian(a.sigma, a.truncation)?,
                evaluation: evaluation(&a.sampling)?,
                grid: delay_grid(&a.delay)?,
            },
            a.output,
        ),
        CliCommand::Filtered(a) => {
            let center = a
                .filter_center
                .ok_or_else(|| invalid("--filter-center", "required for filtered runs"))?;
            let width = a
                .filter_width
                .ok_or_else(|| invalid("--filter-width", "required for filtered runs"))?;
            if !(center.is_finite() && center > 0.0) {
                return Err(invalid("--filter-center", format!("must be positive, got {center}")));
            }
            if !(width.is_finite() && width > 0.0) {
                return Err(invalid("--filter-width", format!("must be positive, got {width}")));
            }
            (
                Task::Filtered {
                    cfg: phase_config(&a.phase)?,
                    band: Spectrum::band_pass(center, width),
                    evaluation: evaluation(&a.sampling)?,
                    grid: delay_grid(&a.delay)?,
                },
                a.output,
            )
        }
        CliCommand::SweepXi(a) => {
            check_finite(a.zeta, "--zeta")?;
            check_finite(a.tau, "--tau")?;
            check_steps(a.steps)?;
            check_range(a.xi_min, a.xi_max, "--xi-min")?;
            (
                Task::SweepXi {
                    zeta: a.zeta,
                    convention: a.convention,
                    spectrum: gaussian(a.sigma, a.truncation)?,
                    evaluation: evaluation(&a.sampling)?,
                    xi_min: a.xi_min,
                    xi_max: a.xi_max,
                    steps: a.steps,
                    tau: a.tau,
                },
                a.output,
            )
        }
        CliCommand::Noon(a) => {
            if a.n == 0 {
                return Err(invalid("--n", "order must be at least 1"));
            }
            check_steps(a.steps)?;
            check_range(a.phi_min, a.phi_max, "--phi-min")?;
            (
                Task::Noon {
                    n: a.n,
                    phi_min: a.phi_min,
                    phi_max: a.phi_max,
                    steps: a.steps,
                },
                a.output,
            )
        }
        CliCommand::Fit(a) => (Task::Fit { input: a.input }, a.output),
    };
    Ok(RunConfig { task, output })
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error("fit: {0}")]
    Analysis(AnalysisError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Analysis(AnalysisError::Degenerate(_)) => EXIT_DEGENERATE,
            RunError::Correlation(_) => EXIT_USAGE,
            _ => EXIT_IO,
        }
    }
}

/// What a run produced, before it is written anywhere.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Curve(CorrelationCurve),
    XiSweep(XiSweep),
    Noon { n: u32, points: Vec<(f64, f64)> },
    /// Fit plus the number of input points.
    Fit(FitResult, usize),
}

impl Output {
    fn table(&self) -> Table<'_> {
        match self {
            Output::Curve(c) => Table::Curve(c),
            Output::XiSweep(s) => Table::XiSweep(s),
            Output::Noon { n, points } => Table::Noon { n: *n, points },
            Output::Fit(f, _) => Table::Fit(f),
        }
    }

    fn len(&self) -> usize {
        match self {
            Output::Curve(c) => c.len(),
            Output::XiSweep(s) => s.xi.len(),
            Output::Noon { points, .. } => points.len(),
            Output::Fit(_, n) => *n,
        }
    }
}

fn method_label(e: &Evaluation) -> &'static str {
    match e {
        Evaluation::Analytic => "analytic",
        Evaluation::Sampled(p) => Method::from(*p).name(),
    }
}

/// Runs the computation without touching the output destination.
pub fn compute(task: &Task) -> Result<Output, RunError> {
    Ok(match task {
        Task::SweepTau {
            cfg,
            spectrum,
            evaluation,
            grid,
        } => {
            let points = grid.points();
            match (evaluation, spectrum) {
                (Evaluation::Analytic, Spectrum::Gaussian { sigma, .. }) => {
                    Output::Curve(analytic_curve(cfg, *sigma, &points)?)
                }
                (Evaluation::Sampled(plan), _) => {
                    Output::Curve(ensemble_coincidence(cfg, spectrum, plan, &points)?)
                }
                (Evaluation::Analytic, Spectrum::BandPass { .. }) => {
                    return Err(CorrelationError::NotABand.into())
                }
            }
        }
        Task::Filtered {
            cfg,
            band,
            evaluation,
            grid,
        } => {
            let points = grid.points();
            match (evaluation, band) {
                (Evaluation::Sampled(plan), _) => {
                    Output::Curve(filtered_coincidence(cfg, band, plan, &points)?)
                }
                (Evaluation::Analytic, Spectrum::BandPass { center, width }) => {
                    let r_mean = points
                        .iter()
                        .map(|&t| analytic_band_coincidence(cfg, *center, *width, t))
                        .collect();
                    let meta = CurveMeta {
                        method: Method::Analytic,
                        cfg: Some(*cfg),
                        spectrum: Some(*band),
                    };
                    let n = points.len();
                    Output::Curve(CorrelationCurve::new(points, r_mean, vec![0.0; n], meta)?)
                }
                (Evaluation::Analytic, Spectrum::Gaussian { .. }) => {
                    return Err(CorrelationError::NotABand.into())
                }
            }
        }
        Task::SweepXi {
            zeta,
            convention,
            spectrum,
            evaluation,
            xi_min,
            xi_max,
            steps,
            tau,
        } => {
            let grid = linspace(*xi_min, *xi_max, *steps);
            match (evaluation, spectrum) {
                (Evaluation::Analytic, Spectrum::Gaussian { sigma, .. }) => {
                    Output::XiSweep(xi_sweep(*zeta, *sigma, *convention, &grid, *tau)?)
                }
                (Evaluation::Sampled(plan), _) => Output::XiSweep(xi_sweep_ensemble(
                    *zeta, *convention, spectrum, plan, &grid, *tau,
                )?),
                (Evaluation::Analytic, Spectrum::BandPass { .. }) => {
                    return Err(CorrelationError::NotABand.into())
                }
            }
        }
        Task::Noon {
            n,
            phi_min,
            phi_max,
            steps,
        } => {
            let points = linspace(*phi_min, *phi_max, *steps)
                .into_iter()
                .map(|phi| noon_correlation(*n, phi).map(|r| (phi, r)))
                .collect::<Result<Vec<_>, _>>()?;
            Output::Noon { n: *n, points }
        }
        Task::Fit { input } => {
            let curve = read_csv(input)?;
            Output::Fit(fit_gaussian_envelope(&curve).map_err(RunError::Analysis)?, curve.len())
        }
    })
}

fn fit_report(f: &FitResult) -> String {
    format!(
        "b={}\na={}\nc={:e}\nrms_residual={:e}\nconverged={}\niterations={}\n",
        f.baseline, f.amplitude, f.rate, f.rms_residual, f.converged, f.iterations
    )
}

/// Executes a configuration, writing results and a summary line to the
/// given streams. Returns the process exit status.
pub fn run_with(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let start = Instant::now();
    let result = compute(&config.task).and_then(|out| {
        if let Output::Fit(f, _) = &out {
            stdout.write_all(fit_report(f).as_bytes())?;
        }
        match (&config.output, &out) {
            (Some(path), _) => write_csv(&out.table(), path)?,
            (None, Output::Fit(..)) => {}
            (None, _) => stdout.write_all(render(&out.table()).as_bytes())?,
        }
        Ok(out)
    });
    match result {
        Ok(out) => {
            let method = match &config.task {
                Task::SweepTau { evaluation, .. }
                | Task::Filtered { evaluation, .. }
                | Task::SweepXi { evaluation, .. } => method_label(evaluation),
                Task::Noon { .. } => "closed-form",
                Task::Fit { .. } => "lm",
            };
            let _ = writeln!(
                stderr,
                "{}: method={} points={} wall={:.3}s",
                config.task.name(),
                method,
                out.len(),
                start.elapsed().as_secs_f64()
            );
            EXIT_OK
        }
        // A closed pipe downstream (`| head`) is not worth reporting.
        Err(RunError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(config: &RunConfig) -> i32 {
    run_with(config, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
