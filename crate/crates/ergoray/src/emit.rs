//! Serialization of paths, events, and reports.
//!
//! Trajectories go to CSV (streamable, diffable) or JSON lines; events
//! ride in a JSON sidecar; structured reports are JSON documents with a
//! fixed envelope (schema version, generator version, tolerances, and a
//! config echo). All floats are written as Rust's shortest round-trip
//! decimals, so re-parsing an emitted file reproduces every sample
//! bit-exactly and repeated runs of a fixed config produce identical
//! bytes.
//!
//! Non-finite values are refused: a path containing a NaN or infinity
//! serializes only if the integrator recorded a `numerical_failure`
//! event explaining it.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::geodesic::{Event, EventKind, GeodesicPath, PathSample};

/// Exact header of every trajectory CSV.
pub const CSV_HEADER: &str = "s,x0,rho,phi_unwrapped,z,xi_rho,xi_phi,xi_z,H_residual,delta1,delta2,region";

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("refusing to serialize a non-finite {what} with no numerical-failure event on the path")]
    NonFinite { what: &'static str },
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Shortest decimal that parses back to the same f64.
fn num(v: f64) -> String {
    format!("{v}")
}

fn sample_finite(s: &PathSample) -> bool {
    [
        s.s,
        s.x0,
        s.point.rho,
        s.point.phi,
        s.point.z,
        s.xi.xi0,
        s.xi.xi_rho,
        s.xi.xi_phi,
        s.xi.xi_z,
        s.h_residual,
        s.delta1,
        s.delta2,
    ]
    .iter()
    .all(|v| v.is_finite())
}

/// A path may carry non-finite numbers only when it also carries the
/// event that reports the breakdown.
fn guard_finite(samples: &[PathSample], events: &[Event]) -> Result<(), EmitError> {
    let excused = events.iter().any(|e| e.kind == EventKind::NumericalFailure);
    if excused {
        return Ok(());
    }
    if samples.iter().any(|s| !sample_finite(s)) {
        return Err(EmitError::NonFinite { what: "sample" });
    }
    let event_finite = |e: &Event| {
        [e.s, e.x0, e.point.rho, e.point.phi, e.point.z].iter().all(|v| v.is_finite())
            && e.data.map_or(true, |d| d.is_finite())
    };
    if events.iter().any(|e| !event_finite(e)) {
        return Err(EmitError::NonFinite { what: "event" });
    }
    Ok(())
}

fn push_csv_row(out: &mut String, s: &PathSample) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        num(s.s),
        num(s.x0),
        num(s.point.rho),
        num(s.point.phi),
        num(s.point.z),
        num(s.xi.xi_rho),
        num(s.xi.xi_phi),
        num(s.xi.xi_z),
        num(s.h_residual),
        num(s.delta1),
        num(s.delta2),
        s.region.name(),
    );
}

/// Render a path as CSV: one header line, one row per accepted step.
pub fn path_csv(path: &GeodesicPath) -> Result<String, EmitError> {
    guard_finite(&path.samples, &path.events)?;
    let mut out = String::with_capacity(64 * (path.samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &path.samples {
        push_csv_row(&mut out, s);
    }
    Ok(out)
}

/// One trajectory sample as read back from a CSV or JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SampleRow {
    pub s: f64,
    pub x0: f64,
    pub rho: f64,
    pub phi_unwrapped: f64,
    pub z: f64,
    pub xi_rho: f64,
    pub xi_phi: f64,
    pub xi_z: f64,
    #[serde(rename = "H_residual")]
    pub h_residual: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub region: String,
}

impl SampleRow {
    fn from_sample(s: &PathSample) -> Self {
        SampleRow {
            s: s.s,
            x0: s.x0,
            rho: s.point.rho,
            phi_unwrapped: s.point.phi,
            z: s.point.z,
            xi_rho: s.xi.xi_rho,
            xi_phi: s.xi.xi_phi,
            xi_z: s.xi.xi_z,
            h_residual: s.h_residual,
            delta1: s.delta1,
            delta2: s.delta2,
            region: s.region.name().to_string(),
        }
    }
}

/// Parse a trajectory CSV produced by [`path_csv`].
pub fn parse_path_csv(text: &str) -> Result<Vec<SampleRow>, EmitError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        Some((_, h)) => {
            return Err(EmitError::Csv { line: 1, message: format!("unexpected header `{h}`") });
        }
        None => return Err(EmitError::Csv { line: 1, message: "empty file".to_string() }),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 12 {
            return Err(EmitError::Csv {
                line: lineno,
                message: format!("expected 12 columns, got {}", cells.len()),
            });
        }
        let f = |i: usize| -> Result<f64, EmitError> {
            cells[i].parse::<f64>().map_err(|_| EmitError::Csv {
                line: lineno,
                message: format!("column {} is not a number: `{}`", i + 1, cells[i]),
            })
        };
        rows.push(SampleRow {
            s: f(0)?,
            x0: f(1)?,
            rho: f(2)?,
            phi_unwrapped: f(3)?,
            z: f(4)?,
            xi_rho: f(5)?,
            xi_phi: f(6)?,
            xi_z: f(7)?,
            h_residual: f(8)?,
            delta1: f(9)?,
            delta2: f(10)?,
            region: cells[11].to_string(),
        });
    }
    Ok(rows)
}

/// Render a path as JSON lines, one object per sample with the same
/// fields as the CSV columns.
pub fn path_jsonl(path: &GeodesicPath) -> Result<String, EmitError> {
    guard_finite(&path.samples, &path.events)?;
    let mut out = String::with_capacity(96 * path.samples.len());
    for s in &path.samples {
        let row = SampleRow::from_sample(s);
        out.push_str(&serde_json::to_string(&row).expect("finite sample row serializes"));
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct LocationRow {
    rho: f64,
    phi: f64,
    z: f64,
}

#[derive(Serialize)]
struct EventRow<'a> {
    kind: &'a str,
    s: f64,
    x0: f64,
    location: LocationRow,
    data: Option<f64>,
}

#[derive(Serialize)]
struct EventsDoc<'a> {
    schema_version: u32,
    events: Vec<EventRow<'a>>,
}

/// Render the sidecar document listing a path's events.
pub fn events_json(path: &GeodesicPath) -> Result<String, EmitError> {
    guard_finite(&path.samples, &path.events)?;
    let doc = EventsDoc {
        schema_version: SCHEMA_VERSION,
        events: path
            .events
            .iter()
            .map(|e| EventRow {
                kind: e.kind.name(),
                s: e.s,
                x0: e.x0,
                location: LocationRow { rho: e.point.rho, phi: e.point.phi, z: e.point.z },
                data: e.data,
            })
            .collect(),
    };
    Ok(pretty(&doc))
}

/// Plain two-column text files for external plotting: the trajectory in
/// the `(x0, rho)` plane and in the spatial `(x, y)` plane.
pub fn plot_pair_files(path: &GeodesicPath) -> Result<(String, String), EmitError> {
    guard_finite(&path.samples, &path.events)?;
    let mut x0_rho = String::new();
    let mut xy = String::new();
    for s in &path.samples {
        let _ = writeln!(x0_rho, "{} {}", num(s.x0), num(s.point.rho));
        let _ = writeln!(
            xy,
            "{} {}",
            num(s.point.rho * s.point.phi.cos()),
            num(s.point.rho * s.point.phi.sin())
        );
    }
    Ok((x0_rho, xy))
}

/// Numerical gates echoed into every report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// `|H|` failure threshold coefficient of the integrator.
    pub h_residual_coeff: f64,
    /// Order-doubling agreement required of energy quadratures.
    pub energy_convergence_tol: f64,
}

#[derive(Serialize)]
struct Generator {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    /// Normalized config text (re-parses to the same run).
    text: String,
    /// The same config, structured.
    resolved: &'a RunConfig,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    generator: Generator,
    tolerances: Tolerances,
    config: ConfigEcho<'a>,
    report: &'a T,
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report bodies serialize");
    s.push('\n');
    s
}

/// Wrap a report body in the standard envelope and render it. Field
/// order is fixed by the envelope's struct order, so bytes are stable
/// for a fixed config.
pub fn report_json<T: Serialize>(config: &RunConfig, body: &T) -> String {
    let tolerances = Tolerances {
        rtol: config.stop.rtol,
        atol: config.stop.atol,
        h_residual_coeff: crate::geodesic::StopSpec::default().h_residual_coeff,
        energy_convergence_tol: crate::energy::EnergyOptions::default().convergence_tol,
    };
    let doc = Envelope {
        schema_version: SCHEMA_VERSION,
        generator: Generator { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") },
        tolerances,
        config: ConfigEcho { text: config.emit_text(), resolved: config },
        report: body,
    };
    pretty(&doc)
}

/// Write `content` to `path`, creating parent directories. I/O errors
/// carry the path they happened on.
pub fn write_text(path: &Path, content: &str) -> Result<(), EmitError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|source| EmitError::Io { path: parent.to_path_buf(), source })?;
        }
    }
    fs::write(path, content).map_err(|source| EmitError::Io { path: path.to_path_buf(), source })
}
