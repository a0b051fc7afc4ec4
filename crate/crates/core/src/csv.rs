//! Plain-text CSV exchange format.
//!
//! ```text
//! # biphoton-hom v1
//! # method=quad,xi=0,zeta=1.5707963267948966,sigma=1000000000,convention=paper,nodes=2001,truncation=3
//! tau,R_mean,R_stderr
//! -0.000000005,0.5000414350703432,0
//! ```
//!
//! Numbers use the shortest decimal form that parses back to the same
//! `f64`. Lines end in LF. Readers skip every `#` line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::analysis::FitResult;
use crate::correlation::{CorrelationCurve, CorrelationError, CurveMeta, Method, XiSweep};
use crate::ensemble::Spectrum;

pub const MAGIC: &str = "# biphoton-hom v1";
pub const CURVE_HEADER: &str = "tau,R_mean,R_stderr";
pub const XI_HEADER: &str = "xi,R_mean,R_stderr";
pub const NOON_HEADER: &str = "phi,R";
pub const FIT_HEADER: &str = "b,a,c,rms_residual,converged,iterations";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("no header line found")]
    MissingHeader,
    #[error("line {line}: tau must be strictly increasing")]
    NonMonotone { line: usize },
    #[error(transparent)]
    Curve(#[from] CorrelationError),
}

/// Anything that can be written in the exchange format.
#[derive(Debug, Clone, Copy)]
pub enum Table<'a> {
    Curve(&'a CorrelationCurve),
    XiSweep(&'a XiSweep),
    Noon { n: u32, points: &'a [(f64, f64)] },
    Fit(&'a FitResult),
}

fn push_meta(keys: &mut Vec<(&'static str, String)>, meta: &CurveMeta) {
    keys.push(("method", meta.method.name().to_string()));
    if let Some(cfg) = meta.cfg {
        keys.push(("xi", cfg.xi.to_string()));
        keys.push(("zeta", cfg.zeta.to_string()));
    }
    match meta.spectrum {
        Some(Spectrum::Gaussian { sigma, truncation }) => {
            keys.push(("sigma", sigma.to_string()));
            if truncation.is_finite() {
                keys.push(("truncation", truncation.to_string()));
            }
        }
        Some(Spectrum::BandPass { center, width }) => {
            keys.push(("filter_center", center.to_string()));
            keys.push(("filter_width", width.to_string()));
        }
        None => {}
    }
    if let Some(cfg) = meta.cfg {
        keys.push(("convention", cfg.convention.to_string()));
    }
    match meta.method {
        Method::MonteCarlo { n, seed } => {
            keys.push(("seed", seed.to_string()));
            keys.push(("samples", n.to_string()));
        }
        Method::Quadrature { nodes } => keys.push(("nodes", nodes.to_string())),
        Method::Analytic | Method::External => {}
    }
}

fn meta_line(keys: &[(&'static str, String)]) -> String {
    let body: Vec<String> = keys.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("# {}", body.join(","))
}

/// Renders a table to its exact file contents.
pub fn render(table: &Table<'_>) -> String {
    let mut keys = Vec::new();
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    match table {
        Table::Curve(c) => {
            push_meta(&mut keys, &c.meta);
            out.push_str(&meta_line(&keys));
            out.push('\n');
            out.push_str(CURVE_HEADER);
            out.push('\n');
            for k in 0..c.len() {
                let _ = writeln!(out, "{},{},{}", c.tau[k], c.r_mean[k], c.r_stderr[k]);
            }
        }
        Table::XiSweep(s) => {
            push_meta(&mut keys, &s.meta);
            // ξ is the swept column, not a fixed setting.
            keys.retain(|(k, _)| *k != "xi");
            keys.push(("tau", s.tau.to_string()));
            out.push_str(&meta_line(&keys));
            out.push('\n');
            out.push_str(XI_HEADER);
            out.push('\n');
            for k in 0..s.xi.len() {
                let _ = writeln!(out, "{},{},{}", s.xi[k], s.r_mean[k], s.r_stderr[k]);
            }
        }
        Table::Noon { n, points } => {
            keys.push(("method", "noon".to_string()));
            keys.push(("n", n.to_string()));
            out.push_str(&meta_line(&keys));
            out.push('\n');
            out.push_str(NOON_HEADER);
            out.push('\n');
            for (phi, r) in points.iter() {
                let _ = writeln!(out, "{phi},{r}");
            }
        }
        Table::Fit(f) => {
            keys.push(("method", "fit".to_string()));
            keys.push(("model", "b+a*exp(-c*tau^2)".to_string()));
            out.push_str(&meta_line(&keys));
            out.push('\n');
            out.push_str(FIT_HEADER);
            out.push('\n');
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                f.baseline, f.amplitude, f.rate, f.rms_residual, f.converged, f.iterations
            );
        }
    }
    out
}

pub fn write_csv(table: &Table<'_>, path: &Path) -> Result<(), CsvError> {
    fs::write(path, render(table)).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<CorrelationCurve, CsvError> {
    let text = fs::read_to_string(path).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_curve(&text)
}

/// Parses a delay curve. A missing stderr column reads as zero.
pub fn parse_curve(text: &str) -> Result<CorrelationCurve, CsvError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());

    let (hline, header) = lines.next().ok_or(CsvError::MissingHeader)?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.first() != Some(&"tau") || !(2..=3).contains(&columns.len()) {
        return Err(CsvError::Malformed {
            line: hline,
            msg: format!("expected header `{CURVE_HEADER}`, got `{header}`"),
        });
    }
    let width = columns.len();

    let (mut tau, mut mean, mut stderr) = (Vec::new(), Vec::new(), Vec::new());
    for (line, row) in lines {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(CsvError::Malformed {
                line,
                msg: format!("expected {width} fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CsvError::Malformed {
                    line,
                    msg: format!("`{s}` is not a finite number"),
                })
        };
        let t = parse(fields[0])?;
        if let Some(&prev) = tau.last() {
            if t <= prev {
                return Err(CsvError::NonMonotone { line });
            }
        }
        tau.push(t);
        mean.push(parse(fields[1])?);
        stderr.push(if width == 3 { parse(fields[2])? } else { 0.0 });
    }
    Ok(CorrelationCurve::new(tau, mean, stderr, CurveMeta::external())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{ensemble_coincidence, linspace};
    use crate::ensemble::SamplingPlan;
    use crate::model::PhaseConfig;
    use proptest::prelude::*;

    fn sample_curve() -> CorrelationCurve {
        ensemble_coincidence(
            &PhaseConfig::default(),
            &Spectrum::gaussian(1e9),
            &SamplingPlan::MonteCarlo { n: 500, seed: 9 },
            &linspace(-5e-9, 5e-9, 21),
        )
        .unwrap()
    }

    #[test]
    fn layout_is_exact() {
        let c = CorrelationCurve::new(
            vec![-1e-9, 0.0, 2.5e-9],
            vec![0.5, 0.0, 0.25],
            vec![0.0, 0.0, 0.125],
            CurveMeta {
                method: Method::Quadrature { nodes: 3 },
                cfg: Some(PhaseConfig::default()),
                spectrum: Some(Spectrum::gaussian(1e9)),
            },
        )
        .unwrap();
        let text = render(&Table::Curve(&c));
        assert_eq!(
            text,
            "# biphoton-hom v1\n\
             # method=quad,xi=0,zeta=1.5707963267948966,sigma=1000000000,truncation=3,convention=paper,nodes=3\n\
             tau,R_mean,R_stderr\n\
             -0.000000001,0.5,0\n\
             0,0,0\n\
             0.0000000025,0.25,0.125\n"
        );
        assert_eq!(text.matches(CURVE_HEADER).count(), 1);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn monte_carlo_meta_keys() {
        let text = render(&Table::Curve(&sample_curve()));
        let meta = text.lines().nth(1).unwrap();
        assert!(meta.starts_with("# method=mc,xi=0,zeta="));
        assert!(meta.contains(",convention=paper,seed=9,samples=500"));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample_curve();
        let back = parse_curve(&render(&Table::Curve(&c))).unwrap();
        assert_eq!(back.tau, c.tau);
        assert_eq!(back.r_mean, c.r_mean);
        assert_eq!(back.r_stderr, c.r_stderr);
        assert_eq!(back.meta, CurveMeta::external());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let c = sample_curve();
        write_csv(&Table::Curve(&c), &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.r_mean, c.r_mean);
    }

    #[test]
    fn rejects_non_monotone_tau() {
        let text = "# biphoton-hom v1\ntau,R_mean,R_stderr\n0,0.5,0\n1,0.4,0\n1,0.3,0\n";
        assert!(matches!(parse_curve(text), Err(CsvError::NonMonotone { line: 5 })));
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let text = "# biphoton-hom v1\n# x=1\ntau,R_mean,R_stderr\n0,0.5,0\n1,abc,0\n";
        match parse_curve(text) {
            Err(CsvError::Malformed { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let text = "tau,R_mean,R_stderr\n0,0.5\n";
        assert!(matches!(parse_curve(text), Err(CsvError::Malformed { line: 2, .. })));
        assert!(matches!(parse_curve("# only comments\n"), Err(CsvError::MissingHeader)));
        assert!(matches!(parse_curve("phi,R\n0,1\n"), Err(CsvError::Malformed { line: 1, .. })));
    }

    #[test]
    fn two_column_input_reads_zero_stderr() {
        let c = parse_curve("tau,R\n0,0.1\n1,0.2\n").unwrap();
        assert_eq!(c.r_stderr, vec![0.0, 0.0]);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(read_csv(Path::new("/nonexistent/x.csv")), Err(CsvError::Io { .. })));
    }

    proptest! {
        #[test]
        fn arbitrary_values_round_trip(start in -1e3..1e3f64,
                                       steps in proptest::collection::vec(1e-300..1e3f64, 1..40),
                                       seed in any::<u64>()) {
            let mut tau = vec![start];
            for s in &steps {
                let next = tau.last().unwrap() + s;
                if next > *tau.last().unwrap() { tau.push(next); }
            }
            let n = tau.len();
            let r: Vec<f64> = (0..n).map(|k| f64::from_bits(seed.wrapping_mul(k as u64 + 1) >> 12 | 0x3FF0_0000_0000_0000) - 1.0).collect();
            let e: Vec<f64> = r.iter().map(|v| v / 3.0).collect();
            let c = CorrelationCurve::new(tau, r, e, CurveMeta::external()).unwrap();
            let back = parse_curve(&render(&Table::Curve(&c))).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
