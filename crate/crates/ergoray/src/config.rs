//! Run configuration: a small line-oriented `key = value` language with
//! dotted keys.
//!
//! Design goals, in order:
//!
//! 1. **Full validation before any computation.** [`parse_config`] either
//!    returns a config whose every field is usable, or a list of *all*
//!    problems found (not just the first), each tagged with the line it
//!    came from where one exists.
//! 2. **No silent typos.** Unknown keys are errors, as are keys that do
//!    not apply to the configured backend.
//! 3. **Round-trip.** [`RunConfig::emit_text`] writes a normalized form
//!    that re-parses to an equal config, so tools can rewrite configs
//!    (parameter sweeps do exactly that).
//!
//! # Language
//!
//! One `key = value` pair per line. Keys are dotted, lower-case paths
//! (`metric.kind`, `initial.rho0`). Blank lines and lines starting with
//! `#` are skipped. There are no sections, quotes, or continuation
//! lines.
//!
//! ```text
//! # rotating backend, aligned start
//! metric.kind = kerr
//! metric.m = 1
//! metric.a = 0.8
//! initial.preset = eq-7.5
//! initial.rho0 = 2.0
//! ```
//!
//! # Key reference
//!
//! | key | type | notes |
//! |-----|------|-------|
//! | `metric.kind` | `acoustic` \| `kerr` | required |
//! | `metric.radial` | float | acoustic flow strength A (required for acoustic) |
//! | `metric.angular` | float | acoustic rotation strength B (required for acoustic) |
//! | `metric.m` | float > 0 | rotating-hole mass (required for kerr) |
//! | `metric.a` | float >= 0 | rotating-hole spin (required for kerr) |
//! | `initial.rho0` | float > 0 | start radius (required) |
//! | `initial.phi0` | float | start angle (default 0) |
//! | `initial.z0` | float | start height (default 0) |
//! | `initial.preset` | token | named covector family, see below |
//! | `initial.eta_rho` | float | explicit covector (with `eta_phi`), or the free parameter of `remark-4.2` |
//! | `initial.eta_phi` | float | explicit covector |
//! | `initial.eta_z` | float | explicit covector (default 0) |
//! | `run.branch` | `plus` \| `minus` \| `both` | default `both` |
//! | `run.direction` | `forward` \| `backward` \| `both` | default `both` |
//! | `run.seed` | integer >= 0 | default 0; drives sampled sweeps |
//! | `stop.max_x0` | float > 0 | default 200 |
//! | `stop.escape_rho` | float > 0 | optional escape radius |
//! | `stop.rtol` | float > 0 | default 1e-10 |
//! | `stop.atol` | float > 0 | default 1e-12 |
//! | `bump.center_rho` | float > 0 | default `initial.rho0` |
//! | `bump.center_phi` | float | default `initial.phi0` |
//! | `bump.center_z` | float | default `initial.z0` |
//! | `bump.halfwidth_rho` | float > 0 | required if any `bump.*` is set |
//! | `bump.halfwidth_phi` | float > 0 | required if any `bump.*` is set |
//! | `bump.halfwidth_z` | float > 0 | default 0.1 (planar backend ignores it) |
//! | `bump.order` | integer in 2..=512 | quadrature order per axis, default 48 |
//! | `output.dir` | string | default `out` |
//! | `output.format` | `csv` \| `jsonl` | default `csv` |
//! | `output.plot_data` | bool | also emit plain plotting pair files |
//! | `sweep.parameter` | key | numeric key to vary |
//! | `sweep.values` | comma-separated floats | explicit grid |
//! | `sweep.min`, `sweep.max`, `sweep.samples` | floats + integer | sampled grid (uses `run.seed`) |
//!
//! Presence of any `bump.*` key enables energy reports; presence of any
//! `sweep.*` key makes the config a sweep (and `sweep` the only
//! subcommand that accepts it).
//!
//! # Initial-data presets
//!
//! The four tokens name covector families with closed forms; each is
//! resolved at parse time against the configured metric and `rho0`:
//!
//! * `eq-4.9` — draining/rotating vortex pair with a trapped negative
//!   branch: `eta_rho = -2|A|/rho0`, `eta_phi = -rho0 sqrt(1 - 4A^2/rho0^2)`.
//!   Needs the acoustic backend and `rho0 > 2|A|`.
//! * `eq-5.2` — weak-circulation vortex pair that falls through the
//!   horizon: `eta_rho = |A|/rho0`, `eta_phi = -B`. Acoustic only.
//! * `eq-7.5` — rotating-hole covector aligned with the frame field at
//!   the equatorial start: `eta_rho = b_rho(rho0)`,
//!   `eta_phi = rho0 * b_phi(rho0)`. Needs the kerr backend and a start
//!   off the equatorial disc (`rho0 > a` when `z0 = 0`).
//! * `remark-4.2` — pure-rotation (A = 0) trapped ray: `eta_rho` is
//!   given in the config (`|eta_rho| < 1`),
//!   `eta_phi = -rho0 sqrt(1 - eta_rho^2)`. Needs `metric.radial = 0`.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::geodesic::{Direction, StopSpec};
use crate::hamiltonian::{Branch, Covector};
use crate::metric::{MetricModel, SpatialPoint};

/// Version stamp written into every emitted report document. Bump it
/// whenever a serialized field changes meaning, is removed, or is
/// renamed; additions alone also bump it so readers can gate on it.
pub const SCHEMA_VERSION: u32 = 1;

/// One configuration problem. `line` is `None` for file-level errors
/// (a required key that is missing has no line to point at).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError { line: Some(line), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        ConfigError { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Named covector families. The tokens are the config-file spellings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    /// Token `eq-4.9`: vortex pair with a trapped negative branch
    /// (dispatches to the superradiant or, for outflow, the white-hole
    /// experiment).
    VortexSuperradiant,
    /// Token `eq-5.2`: weak-circulation vortex pair that crosses the
    /// horizon in finite time on both branches.
    VortexShortLived,
    /// Token `remark-4.2`: pure-rotation trapped ray in a horizonless
    /// vortex.
    VortexNaked,
    /// Token `eq-7.5`: rotating-hole covector aligned with the frame
    /// field at the start radius.
    RotatingAligned,
}

impl PresetName {
    pub fn token(self) -> &'static str {
        match self {
            PresetName::VortexSuperradiant => "eq-4.9",
            PresetName::VortexShortLived => "eq-5.2",
            PresetName::VortexNaked => "remark-4.2",
            PresetName::RotatingAligned => "eq-7.5",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "eq-4.9" => Some(PresetName::VortexSuperradiant),
            "eq-5.2" => Some(PresetName::VortexShortLived),
            "remark-4.2" => Some(PresetName::VortexNaked),
            "eq-7.5" => Some(PresetName::RotatingAligned),
            _ => None,
        }
    }
}

/// How the initial covector was specified, kept for normalized output.
/// The resolved covector itself lives in [`RunConfig::eta`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InitialSpec {
    Preset {
        name: PresetName,
        /// Only the `remark-4.2` family carries a free parameter.
        #[serde(skip_serializing_if = "Option::is_none")]
        eta_rho: Option<f64>,
    },
    Explicit { eta_rho: f64, eta_phi: f64, eta_z: f64 },
}

/// Integration bounds and tolerances as configured. Turned into a
/// [`StopSpec`] (with backend-appropriate event flags) via
/// [`StopConfig::to_stop_spec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StopConfig {
    pub max_x0: f64,
    pub escape_rho: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
}

impl StopConfig {
    pub fn to_stop_spec(&self) -> StopSpec {
        StopSpec {
            max_x0: self.max_x0,
            escape_rho: self.escape_rho,
            rtol: self.rtol,
            atol: self.atol,
            ..StopSpec::default()
        }
    }
}

/// Initial-perturbation support for energy reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpConfig {
    pub center_rho: f64,
    pub center_phi: f64,
    pub center_z: f64,
    pub halfwidth_rho: f64,
    pub halfwidth_phi: f64,
    pub halfwidth_z: f64,
    pub order: usize,
}

impl BumpConfig {
    pub fn center(&self) -> SpatialPoint {
        SpatialPoint::new(self.center_rho, self.center_phi, self.center_z)
    }
}

/// Grid of values for a one-parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SweepPoints {
    Values { values: Vec<f64> },
    Sampled { min: f64, max: f64, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    /// Dotted key of the numeric field to vary.
    pub parameter: String,
    pub points: SweepPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Jsonl => "jsonl",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "jsonl" => Some(OutputFormat::Jsonl),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: String,
    pub format: OutputFormat,
    pub plot_data: bool,
}

/// A fully validated run configuration. Every field is ready to use;
/// in particular `eta` is the resolved covector even when the file
/// named a preset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: MetricModel,
    pub start: SpatialPoint,
    /// Resolved spatial covector of the ray family.
    pub eta: Covector,
    /// How `eta` was specified (kept so emitted configs stay readable).
    pub initial: InitialSpec,
    pub branches: Vec<Branch>,
    pub directions: Vec<Direction>,
    pub stop: StopConfig,
    pub bump: Option<BumpConfig>,
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
    pub seed: u64,
}

/// Every key the language understands, used for unknown-key reporting.
const KNOWN_KEYS: &[&str] = &[
    "metric.kind",
    "metric.radial",
    "metric.angular",
    "metric.m",
    "metric.a",
    "initial.rho0",
    "initial.phi0",
    "initial.z0",
    "initial.preset",
    "initial.eta_rho",
    "initial.eta_phi",
    "initial.eta_z",
    "run.branch",
    "run.direction",
    "run.seed",
    "stop.max_x0",
    "stop.escape_rho",
    "stop.rtol",
    "stop.atol",
    "bump.center_rho",
    "bump.center_phi",
    "bump.center_z",
    "bump.halfwidth_rho",
    "bump.halfwidth_phi",
    "bump.halfwidth_z",
    "bump.order",
    "output.dir",
    "output.format",
    "output.plot_data",
    "sweep.parameter",
    "sweep.values",
    "sweep.min",
    "sweep.max",
    "sweep.samples",
];

/// Keys a sweep may vary: numeric, and meaningful to re-validate.
const SWEEPABLE_KEYS: &[&str] = &[
    "metric.radial",
    "metric.angular",
    "metric.m",
    "metric.a",
    "initial.rho0",
    "initial.phi0",
    "initial.z0",
    "initial.eta_rho",
    "initial.eta_phi",
    "initial.eta_z",
    "stop.max_x0",
    "stop.escape_rho",
];

/// Raw `key = value` pairs with their line numbers, plus the error
/// accumulator that every reading helper feeds.
struct Fields {
    pairs: BTreeMap<String, (usize, String)>,
    errors: Vec<ConfigError>,
}

impl Fields {
    fn collect(text: &str) -> Self {
        let mut pairs: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut errors = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(ConfigError::at(lineno, format!("expected `key = value`, got `{line}`")));
                continue;
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty()
                || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || "._-".contains(c))
            {
                errors.push(ConfigError::at(lineno, format!("malformed key `{key}`")));
                continue;
            }
            if value.is_empty() {
                errors.push(ConfigError::at(lineno, format!("empty value for `{key}`")));
                continue;
            }
            if let Some((first_line, _)) = pairs.get(key) {
                errors.push(ConfigError::at(
                    lineno,
                    format!("duplicate key `{key}` (first set on line {first_line})"),
                ));
                continue;
            }
            pairs.insert(key.to_string(), (lineno, value.to_string()));
        }
        Fields { pairs, errors }
    }

    fn has(&self, key: &str) -> bool {
        self.pairs.contains_key(key)
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.pairs.get(key).map(|(n, _)| *n)
    }

    fn err_at(&mut self, key: &str, message: impl Into<String>) {
        let message = message.into();
        match self.line_of(key) {
            Some(n) => self.errors.push(ConfigError::at(n, message)),
            None => self.errors.push(ConfigError::global(message)),
        }
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.pairs.get(key).map(|(n, v)| (*n, v.as_str()))
    }

    /// A finite float, or `None` with an error recorded.
    fn f64_opt(&mut self, key: &str) -> Option<f64> {
        let (line, value) = self.raw(key)?;
        let value = value.to_string();
        match value.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            Ok(_) => {
                self.errors.push(ConfigError::at(line, format!("`{key}` must be finite, got `{value}`")));
                None
            }
            Err(_) => {
                self.errors.push(ConfigError::at(line, format!("`{key}` must be a number, got `{value}`")));
                None
            }
        }
    }

    /// A required finite float; records a missing-key error.
    fn f64_req(&mut self, key: &str) -> Option<f64> {
        if !self.has(key) {
            self.errors.push(ConfigError::global(format!("missing key `{key}`")));
            return None;
        }
        self.f64_opt(key)
    }

    fn u64_opt(&mut self, key: &str) -> Option<u64> {
        let (line, value) = self.raw(key)?;
        let value = value.to_string();
        match value.parse::<u64>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors.push(ConfigError::at(
                    line,
                    format!("`{key}` must be a nonnegative integer, got `{value}`"),
                ));
                None
            }
        }
    }

    fn bool_opt(&mut self, key: &str) -> Option<bool> {
        let (line, value) = self.raw(key)?;
        match value {
            "true" => Some(true),
            "false" => Some(false),
            other => {
                let other = other.to_string();
                self.errors.push(ConfigError::at(
                    line,
                    format!("`{key}` must be `true` or `false`, got `{other}`"),
                ));
                None
            }
        }
    }

    fn str_opt(&self, key: &str) -> Option<&str> {
        self.raw(key).map(|(_, v)| v)
    }

    /// Comma-separated finite floats.
    fn f64_list_opt(&mut self, key: &str) -> Option<Vec<f64>> {
        let (line, value) = self.raw(key)?;
        let value = value.to_string();
        let mut out = Vec::new();
        for part in value.split(',') {
            let part = part.trim();
            match part.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ => {
                    self.errors.push(ConfigError::at(
                        line,
                        format!("`{key}` must be a comma-separated list of numbers, got `{part}`"),
                    ));
                    return None;
                }
            }
        }
        if out.is_empty() {
            self.errors.push(ConfigError::at(line, format!("`{key}` lists no values")));
            return None;
        }
        Some(out)
    }
}

fn parse_metric(f: &mut Fields) -> Option<MetricModel> {
    let kind = match f.str_opt("metric.kind") {
        Some("acoustic") => Some("acoustic"),
        Some("kerr") => Some("kerr"),
        Some(other) => {
            let other = other.to_string();
            f.err_at("metric.kind", format!("`metric.kind` must be `acoustic` or `kerr`, got `{other}`"));
            None
        }
        None => {
            f.errors.push(ConfigError::global("missing key `metric.kind`".to_string()));
            None
        }
    };

    // Reject keys that belong to the other backend even when the kind
    // itself failed to parse; the message is clearer than `unknown key`.
    let acoustic_only = ["metric.radial", "metric.angular"];
    let kerr_only = ["metric.m", "metric.a"];
    if kind == Some("acoustic") {
        for key in kerr_only {
            if f.has(key) {
                f.err_at(key, format!("`{key}` applies only to `metric.kind = kerr`"));
            }
        }
    }
    if kind == Some("kerr") {
        for key in acoustic_only {
            if f.has(key) {
                f.err_at(key, format!("`{key}` applies only to `metric.kind = acoustic`"));
            }
        }
    }

    match kind? {
        "acoustic" => {
            let radial = f.f64_req("metric.radial");
            let angular = f.f64_req("metric.angular");
            match MetricModel::acoustic(radial?, angular?) {
                Ok(m) => Some(m),
                Err(e) => {
                    f.err_at("metric.radial", e.to_string());
                    None
                }
            }
        }
        "kerr" => {
            let mass = f.f64_req("metric.m");
            let spin = f.f64_req("metric.a");
            // Range-check each parameter on its own so one bad value
            // does not mask the other.
            let mass = mass.filter(|&m| {
                let ok = m > 0.0;
                if !ok {
                    f.err_at("metric.m", format!("`metric.m` must be positive, got {m}"));
                }
                ok
            });
            let spin = spin.filter(|&a| {
                let ok = a >= 0.0;
                if !ok {
                    f.err_at("metric.a", format!("`metric.a` must be nonnegative, got {a}"));
                }
                ok
            });
            match MetricModel::kerr(mass?, spin?) {
                Ok(m) => Some(m),
                Err(e) => {
                    f.err_at("metric.m", e.to_string());
                    None
                }
            }
        }
        _ => unreachable!(),
    }
}

/// Resolve a preset against the metric and start point. Errors are
/// attached to the `initial.preset` line.
fn resolve_preset(
    f: &mut Fields,
    name: PresetName,
    model: &MetricModel,
    start: &SpatialPoint,
    eta_rho_param: Option<f64>,
) -> Option<Covector> {
    let rho0 = start.rho;
    match name {
        PresetName::VortexSuperradiant => {
            let MetricModel::Acoustic { radial, .. } = *model else {
                f.err_at("initial.preset", "preset `eq-4.9` needs `metric.kind = acoustic`");
                return None;
            };
            if radial == 0.0 {
                f.err_at("initial.preset", "preset `eq-4.9` needs a nonzero radial flow");
                return None;
            }
            let a_abs = radial.abs();
            if rho0 <= 2.0 * a_abs {
                f.err_at(
                    "initial.preset",
                    format!(
                        "preset `eq-4.9` needs `initial.rho0` > 2|metric.radial| = {}",
                        2.0 * a_abs
                    ),
                );
                return None;
            }
            let root = (1.0 - 4.0 * a_abs * a_abs / (rho0 * rho0)).sqrt();
            Some(Covector::spatial(-2.0 * a_abs / rho0, -rho0 * root, 0.0))
        }
        PresetName::VortexShortLived => {
            let MetricModel::Acoustic { radial, angular } = *model else {
                f.err_at("initial.preset", "preset `eq-5.2` needs `metric.kind = acoustic`");
                return None;
            };
            Some(Covector::spatial(radial.abs() / rho0, -angular, 0.0))
        }
        PresetName::VortexNaked => {
            let MetricModel::Acoustic { radial, .. } = *model else {
                f.err_at("initial.preset", "preset `remark-4.2` needs `metric.kind = acoustic`");
                return None;
            };
            if radial != 0.0 {
                f.err_at(
                    "initial.preset",
                    "preset `remark-4.2` needs `metric.radial = 0` (pure rotation)",
                );
                return None;
            }
            let Some(eta_rho) = eta_rho_param else {
                f.err_at(
                    "initial.preset",
                    "preset `remark-4.2` needs `initial.eta_rho` (its free parameter)",
                );
                return None;
            };
            if !(eta_rho.abs() < 1.0) {
                f.err_at("initial.eta_rho", format!("preset `remark-4.2` needs |eta_rho| < 1, got {eta_rho}"));
                return None;
            }
            let eta_phi = -rho0 * (1.0 - eta_rho * eta_rho).sqrt();
            Some(Covector::spatial(eta_rho, eta_phi, 0.0))
        }
        PresetName::RotatingAligned => {
            let MetricModel::Kerr { spin, .. } = *model else {
                f.err_at("initial.preset", "preset `eq-7.5` needs `metric.kind = kerr`");
                return None;
            };
            if start.z == 0.0 && rho0 <= spin {
                f.err_at(
                    "initial.preset",
                    format!("preset `eq-7.5` needs `initial.rho0` > `metric.a` = {spin} on the equator"),
                );
                return None;
            }
            match model.fields(&SpatialPoint::equatorial(rho0, 0.0)) {
                Ok(fields) => Some(Covector::spatial(fields.b_rho, rho0 * fields.b_phi, 0.0)),
                Err(e) => {
                    f.err_at("initial.preset", format!("preset `eq-7.5` is undefined here: {e}"));
                    None
                }
            }
        }
    }
}

fn parse_initial(
    f: &mut Fields,
    model: Option<&MetricModel>,
) -> (Option<SpatialPoint>, Option<(InitialSpec, Covector)>) {
    let rho0 = f.f64_req("initial.rho0");
    let phi0 = f.f64_opt("initial.phi0").unwrap_or(0.0);
    let z0 = f.f64_opt("initial.z0").unwrap_or(0.0);

    let start = match rho0 {
        Some(r) if r > 0.0 => Some(SpatialPoint::new(r, phi0, z0)),
        Some(r) => {
            f.err_at("initial.rho0", format!("`initial.rho0` must be positive, got {r}"));
            None
        }
        None => None,
    };

    // A rotating-hole start must avoid the equatorial disc, where the
    // oblate radial coordinate is singular.
    if let (Some(MetricModel::Kerr { spin, .. }), Some(p)) = (model, &start) {
        if p.z == 0.0 && p.rho <= *spin {
            f.err_at(
                "initial.rho0",
                format!("start lies on the equatorial disc: `initial.rho0` <= `metric.a` = {spin} with z0 = 0"),
            );
        }
    }

    let spec = initial_spec(f, model, start.as_ref());
    (start, spec)
}

fn initial_spec(
    f: &mut Fields,
    model: Option<&MetricModel>,
    start: Option<&SpatialPoint>,
) -> Option<(InitialSpec, Covector)> {
    let preset = match f.str_opt("initial.preset") {
        Some(tok) => match PresetName::from_token(tok) {
            Some(p) => Some(p),
            None => {
                let tok = tok.to_string();
                f.err_at(
                    "initial.preset",
                    format!(
                        "unknown preset `{tok}` (expected `eq-4.9`, `eq-5.2`, `eq-7.5`, or `remark-4.2`)"
                    ),
                );
                return None;
            }
        },
        None => None,
    };

    let eta_rho = f.f64_opt("initial.eta_rho");
    let eta_phi = f.f64_opt("initial.eta_phi");
    let eta_z = f.f64_opt("initial.eta_z");

    match preset {
        Some(name) => {
            // Only the pure-rotation family takes an explicit component.
            if name != PresetName::VortexNaked && f.has("initial.eta_rho") {
                f.err_at(
                    "initial.eta_rho",
                    format!("`initial.eta_rho` conflicts with preset `{}`", name.token()),
                );
                return None;
            }
            for key in ["initial.eta_phi", "initial.eta_z"] {
                if f.has(key) {
                    f.err_at(key, format!("`{key}` conflicts with `initial.preset`"));
                    return None;
                }
            }
            // Metric or start may have failed already; their errors are
            // recorded, so just stop here.
            let eta = resolve_preset(f, name, model?, start?, eta_rho)?;
            Some((InitialSpec::Preset { name, eta_rho }, eta))
        }
        None => {
            let mut missing = Vec::new();
            if !f.has("initial.eta_rho") {
                missing.push("`initial.eta_rho`");
            }
            if !f.has("initial.eta_phi") {
                missing.push("`initial.eta_phi`");
            }
            if !missing.is_empty() {
                f.errors.push(ConfigError::global(format!(
                    "initial data is incomplete: set `initial.preset` or give {}",
                    missing.join(" and ")
                )));
                return None;
            }
            let (eta_rho, eta_phi) = (eta_rho?, eta_phi?);
            let eta_z = match f.has("initial.eta_z") {
                true => eta_z?,
                false => 0.0,
            };
            if eta_rho == 0.0 && eta_phi == 0.0 && eta_z == 0.0 {
                f.err_at("initial.eta_rho", "the covector must be nonzero");
                return None;
            }
            Some((
                InitialSpec::Explicit { eta_rho, eta_phi, eta_z },
                Covector::spatial(eta_rho, eta_phi, eta_z),
            ))
        }
    }
}

fn parse_choice<T: Copy>(f: &mut Fields, key: &str, table: &[(&str, T)], both: &[T]) -> Option<Vec<T>> {
    match f.str_opt(key) {
        None => Some(both.to_vec()),
        Some(v) => {
            if v == "both" {
                return Some(both.to_vec());
            }
            if let Some((_, t)) = table.iter().find(|(name, _)| *name == v) {
                return Some(vec![*t]);
            }
            let v = v.to_string();
            let names: Vec<&str> = table.iter().map(|(n, _)| *n).chain(["both"]).collect();
            f.err_at(key, format!("`{key}` must be one of {}, got `{v}`", names.join(", ")));
            None
        }
    }
}

fn parse_stop(f: &mut Fields) -> Option<StopConfig> {
    let max_x0 = match f.f64_opt("stop.max_x0") {
        Some(v) if v > 0.0 => Some(v),
        Some(v) => {
            f.err_at("stop.max_x0", format!("`stop.max_x0` must be positive, got {v}"));
            None
        }
        None if f.has("stop.max_x0") => None,
        None => Some(StopSpec::default().max_x0),
    };
    let escape_rho = match f.f64_opt("stop.escape_rho") {
        Some(v) if v > 0.0 => Some(Some(v)),
        Some(v) => {
            f.err_at("stop.escape_rho", format!("`stop.escape_rho` must be positive, got {v}"));
            None
        }
        None if f.has("stop.escape_rho") => None,
        None => Some(None),
    };
    let mut tol = |key: &str, default: f64| match f.f64_opt(key) {
        Some(v) if v > 0.0 && v < 1.0 => Some(v),
        Some(v) => {
            f.err_at(key, format!("`{key}` must be in (0, 1), got {v}"));
            None
        }
        None if f.has(key) => None,
        None => Some(default),
    };
    let defaults = StopSpec::default();
    let rtol = tol("stop.rtol", defaults.rtol);
    let atol = tol("stop.atol", defaults.atol);
    Some(StopConfig { max_x0: max_x0?, escape_rho: escape_rho?, rtol: rtol?, atol: atol? })
}

fn parse_bump(f: &mut Fields, start: Option<&SpatialPoint>) -> Option<Option<BumpConfig>> {
    let any = KNOWN_KEYS.iter().any(|k| k.starts_with("bump.") && f.has(k));
    if !any {
        return Some(None);
    }
    let mut halfwidth = |key: &str| match f.f64_opt(key) {
        Some(v) if v > 0.0 => Some(v),
        Some(v) => {
            f.err_at(key, format!("`{key}` must be positive, got {v}"));
            None
        }
        None if f.has(key) => None,
        None => {
            f.errors.push(ConfigError::global(format!("missing key `{key}` (required with `bump.*`)")));
            None
        }
    };
    let hw_rho = halfwidth("bump.halfwidth_rho");
    let hw_phi = halfwidth("bump.halfwidth_phi");
    let hw_z = match f.f64_opt("bump.halfwidth_z") {
        Some(v) if v > 0.0 => Some(v),
        Some(v) => {
            f.err_at("bump.halfwidth_z", format!("`bump.halfwidth_z` must be positive, got {v}"));
            None
        }
        None if f.has("bump.halfwidth_z") => None,
        None => Some(0.1),
    };
    let center_rho = match f.f64_opt("bump.center_rho") {
        Some(v) if v > 0.0 => Some(v),
        Some(v) => {
            f.err_at("bump.center_rho", format!("`bump.center_rho` must be positive, got {v}"));
            None
        }
        None if f.has("bump.center_rho") => None,
        None => start.map(|p| p.rho),
    };
    let center_phi = match f.f64_opt("bump.center_phi") {
        Some(v) => Some(v),
        None if f.has("bump.center_phi") => None,
        None => start.map(|p| p.phi),
    };
    let center_z = match f.f64_opt("bump.center_z") {
        Some(v) => Some(v),
        None if f.has("bump.center_z") => None,
        None => start.map(|p| p.z),
    };
    let order = match f.u64_opt("bump.order") {
        Some(v) if (2..=512).contains(&v) => Some(v as usize),
        Some(v) => {
            f.err_at("bump.order", format!("`bump.order` must be in 2..=512, got {v}"));
            None
        }
        None if f.has("bump.order") => None,
        None => Some(48),
    };
    Some(Some(BumpConfig {
        center_rho: center_rho?,
        center_phi: center_phi?,
        center_z: center_z?,
        halfwidth_rho: hw_rho?,
        halfwidth_phi: hw_phi?,
        halfwidth_z: hw_z?,
        order: order?,
    }))
}

fn parse_sweep(f: &mut Fields) -> Option<Option<SweepConfig>> {
    let any = KNOWN_KEYS.iter().any(|k| k.starts_with("sweep.") && f.has(k));
    if !any {
        return Some(None);
    }
    let parameter = match f.str_opt("sweep.parameter") {
        Some(p) if SWEEPABLE_KEYS.contains(&p) => Some(p.to_string()),
        Some(p) => {
            let p = p.to_string();
            f.err_at(
                "sweep.parameter",
                format!("`sweep.parameter` must be a numeric key ({}), got `{p}`", SWEEPABLE_KEYS.join(", ")),
            );
            None
        }
        None => {
            f.errors.push(ConfigError::global("missing key `sweep.parameter`".to_string()));
            None
        }
    };

    let has_values = f.has("sweep.values");
    let has_range = f.has("sweep.min") || f.has("sweep.max") || f.has("sweep.samples");
    if has_values && has_range {
        f.err_at("sweep.values", "`sweep.values` conflicts with `sweep.min`/`sweep.max`/`sweep.samples`");
        return None;
    }
    if !has_values && !has_range {
        f.errors.push(ConfigError::global(
            "sweep needs `sweep.values` or `sweep.min` + `sweep.max` + `sweep.samples`".to_string(),
        ));
        return None;
    }

    let points = if has_values {
        SweepPoints::Values { values: f.f64_list_opt("sweep.values")? }
    } else {
        let mut req = |key: &str| match f.f64_opt(key) {
            Some(v) => Some(v),
            None if f.has(key) => None,
            None => {
                f.errors.push(ConfigError::global(format!("missing key `{key}` (required for a sampled sweep)")));
                None
            }
        };
        let min = req("sweep.min");
        let max = req("sweep.max");
        let samples = match f.u64_opt("sweep.samples") {
            Some(v) if (1..=100_000).contains(&v) => Some(v as usize),
            Some(v) => {
                f.err_at("sweep.samples", format!("`sweep.samples` must be in 1..=100000, got {v}"));
                None
            }
            None if f.has("sweep.samples") => None,
            None => {
                f.errors.push(ConfigError::global(
                    "missing key `sweep.samples` (required for a sampled sweep)".to_string(),
                ));
                None
            }
        };
        let (min, max, samples) = (min?, max?, samples?);
        if min >= max {
            f.err_at("sweep.min", format!("`sweep.min` must be below `sweep.max`, got {min} >= {max}"));
            return None;
        }
        SweepPoints::Sampled { min, max, samples }
    };

    Some(Some(SweepConfig { parameter: parameter?, points }))
}

/// Parse and fully validate a configuration. On failure every detected
/// problem is returned, sorted by line (file-level problems last).
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let mut f = Fields::collect(text);

    for key in f.pairs.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            let (line, _) = f.pairs[key];
            f.errors.push(ConfigError::at(line, format!("unknown key `{key}`")));
        }
    }

    let model = parse_metric(&mut f);
    let (start, initial) = parse_initial(&mut f, model.as_ref());
    let branches = parse_choice(
        &mut f,
        "run.branch",
        &[("plus", Branch::Plus), ("minus", Branch::Minus)],
        &[Branch::Plus, Branch::Minus],
    );
    let directions = parse_choice(
        &mut f,
        "run.direction",
        &[("forward", Direction::Forward), ("backward", Direction::Backward)],
        &[Direction::Forward, Direction::Backward],
    );
    let seed = match f.u64_opt("run.seed") {
        Some(v) => Some(v),
        None if f.has("run.seed") => None,
        None => Some(0),
    };
    let stop = parse_stop(&mut f);
    let bump = parse_bump(&mut f, start.as_ref());
    let sweep = parse_sweep(&mut f);

    let dir = f.str_opt("output.dir").unwrap_or("out").to_string();
    let format = match f.str_opt("output.format") {
        None => Some(OutputFormat::Csv),
        Some(v) => match OutputFormat::from_name(v) {
            Some(fmt) => Some(fmt),
            None => {
                let v = v.to_string();
                f.err_at("output.format", format!("`output.format` must be `csv` or `jsonl`, got `{v}`"));
                None
            }
        },
    };
    let plot_data = match f.bool_opt("output.plot_data") {
        Some(v) => Some(v),
        None if f.has("output.plot_data") => None,
        None => Some(false),
    };

    let config = match (model, start, initial, branches, directions, seed, stop, bump, sweep, format, plot_data) {
        (
            Some(model),
            Some(start),
            Some((initial, eta)),
            Some(branches),
            Some(directions),
            Some(seed),
            Some(stop),
            Some(bump),
            Some(sweep),
            Some(format),
            Some(plot_data),
        ) => Some(RunConfig {
            model,
            start,
            eta,
            initial,
            branches,
            directions,
            stop,
            bump,
            sweep,
            output: OutputConfig { dir, format, plot_data },
            seed,
        }),
        _ => None,
    };

    let mut errors = f.errors;
    if errors.is_empty() {
        let config = config.expect("no errors recorded but the config is incomplete");
        // A sweep must produce valid configs at (or bracketing) its
        // grid, so substitute and re-validate before any run starts.
        errors.extend(validate_sweep_points(&config));
        if errors.is_empty() {
            return Ok(config);
        }
    }
    let mut indexed: Vec<(usize, ConfigError)> = errors.into_iter().enumerate().map(|(i, e)| (i, e)).collect();
    indexed.sort_by_key(|(i, e)| (e.line.unwrap_or(usize::MAX), *i));
    Err(indexed.into_iter().map(|(_, e)| e).collect())
}

fn validate_sweep_points(config: &RunConfig) -> Vec<ConfigError> {
    let Some(sweep) = &config.sweep else { return Vec::new() };
    let probes: Vec<f64> = match &sweep.points {
        SweepPoints::Values { values } => values.clone(),
        SweepPoints::Sampled { min, max, .. } => vec![*min, *max],
    };
    let mut errors = Vec::new();
    for v in probes {
        if let Err(errs) = config.with_parameter(&sweep.parameter, v) {
            for e in errs {
                errors.push(ConfigError::global(format!(
                    "sweep point `{} = {v}` is invalid: {}",
                    sweep.parameter, e.message
                )));
            }
        }
    }
    errors
}

/// Significand-preserving text form of a float: Rust's shortest
/// round-trip decimal.
fn num(v: f64) -> String {
    format!("{v}")
}

impl RunConfig {
    /// Normalized `key = value` pairs, in a stable order, that re-parse
    /// to an equal config (minus the sweep section when `with_sweep` is
    /// false — substituted sweep points must not recurse).
    fn emit_pairs(&self, with_sweep: bool) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));

        match self.model {
            MetricModel::Acoustic { radial, angular } => {
                push("metric.kind", "acoustic".into());
                push("metric.radial", num(radial));
                push("metric.angular", num(angular));
            }
            MetricModel::Kerr { mass, spin } => {
                push("metric.kind", "kerr".into());
                push("metric.m", num(mass));
                push("metric.a", num(spin));
            }
        }

        push("initial.rho0", num(self.start.rho));
        push("initial.phi0", num(self.start.phi));
        push("initial.z0", num(self.start.z));
        match self.initial {
            InitialSpec::Preset { name, eta_rho } => {
                push("initial.preset", name.token().into());
                if let Some(v) = eta_rho {
                    push("initial.eta_rho", num(v));
                }
            }
            InitialSpec::Explicit { eta_rho, eta_phi, eta_z } => {
                push("initial.eta_rho", num(eta_rho));
                push("initial.eta_phi", num(eta_phi));
                push("initial.eta_z", num(eta_z));
            }
        }

        let branch = match self.branches.as_slice() {
            [Branch::Plus] => "plus",
            [Branch::Minus] => "minus",
            _ => "both",
        };
        push("run.branch", branch.into());
        let direction = match self.directions.as_slice() {
            [Direction::Forward] => "forward",
            [Direction::Backward] => "backward",
            _ => "both",
        };
        push("run.direction", direction.into());
        push("run.seed", self.seed.to_string());

        push("stop.max_x0", num(self.stop.max_x0));
        if let Some(r) = self.stop.escape_rho {
            push("stop.escape_rho", num(r));
        }
        push("stop.rtol", num(self.stop.rtol));
        push("stop.atol", num(self.stop.atol));

        if let Some(b) = &self.bump {
            push("bump.center_rho", num(b.center_rho));
            push("bump.center_phi", num(b.center_phi));
            push("bump.center_z", num(b.center_z));
            push("bump.halfwidth_rho", num(b.halfwidth_rho));
            push("bump.halfwidth_phi", num(b.halfwidth_phi));
            push("bump.halfwidth_z", num(b.halfwidth_z));
            push("bump.order", b.order.to_string());
        }

        push("output.dir", self.output.dir.clone());
        push("output.format", self.output.format.name().into());
        push("output.plot_data", self.output.plot_data.to_string());

        if with_sweep {
            if let Some(s) = &self.sweep {
                push("sweep.parameter", s.parameter.clone());
                match &s.points {
                    SweepPoints::Values { values } => {
                        let list: Vec<String> = values.iter().map(|v| num(*v)).collect();
                        push("sweep.values", list.join(", "));
                    }
                    SweepPoints::Sampled { min, max, samples } => {
                        push("sweep.min", num(*min));
                        push("sweep.max", num(*max));
                        push("sweep.samples", samples.to_string());
                    }
                }
            }
        }

        out
    }

    /// Normalized config text; `parse_config(emit_text())` returns an
    /// equal config.
    pub fn emit_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.emit_pairs(true) {
            s.push_str(&k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }

    /// The config with one numeric key replaced (or added) and the sweep
    /// section dropped, re-validated from scratch. This is how sweep
    /// points are produced.
    pub fn with_parameter(&self, key: &str, value: f64) -> Result<RunConfig, Vec<ConfigError>> {
        if !SWEEPABLE_KEYS.contains(&key) {
            return Err(vec![ConfigError::global(format!("`{key}` is not a sweepable key"))]);
        }
        let mut pairs = self.emit_pairs(false);
        match pairs.iter_mut().find(|(k, _)| k == key) {
            Some((_, v)) => *v = num(value),
            None => pairs.push((key.to_string(), num(value))),
        }
        let text: String = pairs.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        parse_config(&text)
    }

    /// Human-readable one-line summary of the configured family.
    pub fn describe(&self) -> String {
        let metric = match self.model {
            MetricModel::Acoustic { radial, angular } => format!("acoustic(A={radial}, B={angular})"),
            MetricModel::Kerr { mass, spin } => format!("kerr(m={mass}, a={spin})"),
        };
        let initial = match self.initial {
            InitialSpec::Preset { name, .. } => format!("preset {}", name.token()),
            InitialSpec::Explicit { .. } => "explicit covector".to_string(),
        };
        format!("{metric}, rho0 = {}, {initial}", self.start.rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const KERR_PRESET: &str = "\
metric.kind = kerr
metric.m = 1
metric.a = 0.8
initial.preset = eq-7.5
initial.rho0 = 2.0
";

    fn parse_ok(text: &str) -> RunConfig {
        match parse_config(text) {
            Ok(c) => c,
            Err(errs) => {
                let msgs: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
                panic!("expected a valid config, got errors:\n{}", msgs.join("\n"));
            }
        }
    }

    fn parse_errs(text: &str) -> Vec<ConfigError> {
        parse_config(text).expect_err("expected config errors")
    }

    #[test]
    fn schema_example_is_valid() {
        let c = parse_ok(KERR_PRESET);
        assert_eq!(c.model, MetricModel::kerr(1.0, 0.8).unwrap());
        assert_eq!(c.start, SpatialPoint::new(2.0, 0.0, 0.0));
        assert_eq!(
            c.initial,
            InitialSpec::Preset { name: PresetName::RotatingAligned, eta_rho: None }
        );
        assert_eq!(c.branches, vec![Branch::Plus, Branch::Minus]);
        assert_eq!(c.directions, vec![Direction::Forward, Direction::Backward]);
        assert_eq!(c.seed, 0);
        assert_eq!(c.output.format, OutputFormat::Csv);
        // The aligned covector has angular component exactly the spin.
        assert!((c.eta.xi_phi - 0.8).abs() < 1e-15);
    }

    #[test]
    fn negative_spin_is_rejected_with_its_line() {
        let text = "\
metric.kind = kerr
metric.m = 1
metric.a = -1
initial.preset = eq-7.5
initial.rho0 = 2.0
";
        let errs = parse_errs(text);
        assert!(
            errs.iter().any(|e| e.line == Some(3) && e.message.contains("nonnegative")),
            "got {errs:?}"
        );
    }

    #[test]
    fn missing_initial_section_lists_every_missing_key() {
        let text = "\
metric.kind = kerr
metric.m = 1
metric.a = 0.8
";
        let errs = parse_errs(text);
        assert!(errs.iter().any(|e| e.message.contains("missing key `initial.rho0`")), "got {errs:?}");
        assert!(
            errs.iter()
                .any(|e| e.message.contains("initial.preset") && e.message.contains("initial.eta_rho")),
            "got {errs:?}"
        );
    }

    #[test]
    fn all_errors_are_collected_not_just_the_first() {
        let text = "\
metric.kind = kerr
metric.m = zero
metric.a = -1
initial.rho0 = -2
initial.preset = eq-9.9
run.branch = sideways
output.format = yaml
mystery.key = 1
";
        let errs = parse_errs(text);
        let lines: Vec<Option<usize>> = errs.iter().map(|e| e.line).collect();
        for expected in [2, 3, 4, 5, 6, 7, 8] {
            assert!(lines.contains(&Some(expected)), "no error for line {expected}: {errs:?}");
        }
        // Sorted by line.
        let nums: Vec<usize> = errs.iter().filter_map(|e| e.line).collect();
        let mut sorted = nums.clone();
        sorted.sort_unstable();
        assert_eq!(nums, sorted);
    }

    #[test]
    fn unknown_and_duplicate_keys_are_errors() {
        let text = "\
metric.kind = acoustic
metric.radial = -1
metric.angular = 10
metric.angular = 11
initial.rho0 = 2.5
initial.preset = eq-4.9
metric.spn = 3
";
        let errs = parse_errs(text);
        assert!(errs.iter().any(|e| e.message.contains("duplicate key `metric.angular`")), "got {errs:?}");
        assert!(errs.iter().any(|e| e.message.contains("unknown key `metric.spn`")), "got {errs:?}");
    }

    #[test]
    fn backend_mismatched_keys_are_flagged() {
        let text = "\
metric.kind = kerr
metric.m = 1
metric.a = 0.8
metric.radial = -1
initial.preset = eq-7.5
initial.rho0 = 2.0
";
        let errs = parse_errs(text);
        assert!(
            errs.iter().any(|e| e.message.contains("`metric.radial` applies only to")),
            "got {errs:?}"
        );
    }

    #[test]
    fn preset_formulas_match_the_experiment_families() {
        // Trapped vortex pair.
        let c = parse_ok(
            "metric.kind = acoustic\nmetric.radial = -1\nmetric.angular = 10\n\
             initial.rho0 = 2.5\ninitial.preset = eq-4.9\n",
        );
        let rho0 = 2.5_f64;
        let root = (1.0 - 4.0 / (rho0 * rho0)).sqrt();
        assert_eq!(c.eta, Covector::spatial(-2.0 / rho0, -rho0 * root, 0.0));

        // Weak circulation.
        let c = parse_ok(
            "metric.kind = acoustic\nmetric.radial = -2\nmetric.angular = 1.5\n\
             initial.rho0 = 2.2\ninitial.preset = eq-5.2\n",
        );
        assert_eq!(c.eta, Covector::spatial(2.0 / 2.2, -1.5, 0.0));

        // Pure rotation with its free parameter.
        let c = parse_ok(
            "metric.kind = acoustic\nmetric.radial = 0\nmetric.angular = 10\n\
             initial.rho0 = 3\ninitial.preset = remark-4.2\ninitial.eta_rho = -0.05\n",
        );
        let expect_phi = -3.0 * (1.0_f64 - 0.0025).sqrt();
        assert_eq!(c.eta, Covector::spatial(-0.05, expect_phi, 0.0));

        // Aligned rotating-hole covector: angular component is the spin.
        let c = parse_ok(KERR_PRESET);
        assert!((c.eta.xi_phi - 0.8).abs() < 1e-15 && c.eta.xi_rho > 0.0);
    }

    #[test]
    fn preset_gates_are_config_errors() {
        // eq-4.9 needs rho0 > 2|A|.
        let errs = parse_errs(
            "metric.kind = acoustic\nmetric.radial = -2\nmetric.angular = 10\n\
             initial.rho0 = 3\ninitial.preset = eq-4.9\n",
        );
        assert!(errs.iter().any(|e| e.message.contains("2|metric.radial|")), "got {errs:?}");

        // remark-4.2 needs A = 0 and its parameter.
        let errs = parse_errs(
            "metric.kind = acoustic\nmetric.radial = -1\nmetric.angular = 10\n\
             initial.rho0 = 3\ninitial.preset = remark-4.2\ninitial.eta_rho = -0.05\n",
        );
        assert!(errs.iter().any(|e| e.message.contains("metric.radial = 0")), "got {errs:?}");
        let errs = parse_errs(
            "metric.kind = acoustic\nmetric.radial = 0\nmetric.angular = 10\n\
             initial.rho0 = 3\ninitial.preset = remark-4.2\n",
        );
        assert!(errs.iter().any(|e| e.message.contains("initial.eta_rho")), "got {errs:?}");

        // eq-7.5 on the acoustic backend is a kind mismatch.
        let errs = parse_errs(
            "metric.kind = acoustic\nmetric.radial = -1\nmetric.angular = 10\n\
             initial.rho0 = 3\ninitial.preset = eq-7.5\n",
        );
        assert!(errs.iter().any(|e| e.message.contains("metric.kind = kerr")), "got {errs:?}");

        // Equatorial start inside the disc.
        let errs = parse_errs("metric.kind = kerr\nmetric.m = 1\nmetric.a = 0.8\ninitial.preset = eq-7.5\ninitial.rho0 = 0.5\n");
        assert!(errs.iter().any(|e| e.message.contains("equatorial disc")), "got {errs:?}");
    }

    #[test]
    fn explicit_covector_conflicts_with_presets() {
        let errs = parse_errs(
            "metric.kind = kerr\nmetric.m = 1\nmetric.a = 0.8\n\
             initial.preset = eq-7.5\ninitial.rho0 = 2\ninitial.eta_phi = 1\n",
        );
        assert!(errs.iter().any(|e| e.message.contains("conflicts with `initial.preset`")), "got {errs:?}");
        let errs = parse_errs(
            "metric.kind = kerr\nmetric.m = 1\nmetric.a = 0.8\n\
             initial.preset = eq-7.5\ninitial.rho0 = 2\ninitial.eta_rho = 0.5\n",
        );
        assert!(errs.iter().any(|e| e.message.contains("conflicts with preset `eq-7.5`")), "got {errs:?}");
    }

    #[test]
    fn full_schema_round_trips() {
        let text = "\
# everything at once
metric.kind = acoustic
metric.radial = -1
metric.angular = 10
initial.rho0 = 2.5
initial.phi0 = 0.25
initial.z0 = 0
initial.eta_rho = -0.8
initial.eta_phi = -2.29128784747792
initial.eta_z = 0.125
run.branch = minus
run.direction = backward
run.seed = 42
stop.max_x0 = 120.5
stop.escape_rho = 40
stop.rtol = 1e-9
stop.atol = 1e-13
bump.halfwidth_rho = 0.4
bump.halfwidth_phi = 0.3
bump.order = 32
output.dir = results/vortex
output.format = jsonl
output.plot_data = true
sweep.parameter = initial.rho0
sweep.values = 2.5, 3, 3.5
";
        let c = parse_ok(text);
        assert_eq!(c.bump.as_ref().unwrap().center_rho, 2.5);
        assert_eq!(c.bump.as_ref().unwrap().center_phi, 0.25);
        let emitted = c.emit_text();
        let c2 = parse_ok(&emitted);
        assert_eq!(c, c2);
        // Normal form is a fixed point.
        assert_eq!(emitted, c2.emit_text());
    }

    #[test]
    fn preset_configs_round_trip() {
        for text in [
            KERR_PRESET.to_string(),
            "metric.kind = acoustic\nmetric.radial = -1\nmetric.angular = 10\ninitial.rho0 = 2.5\ninitial.preset = eq-4.9\n".to_string(),
            "metric.kind = acoustic\nmetric.radial = 0\nmetric.angular = 10\ninitial.rho0 = 3\ninitial.preset = remark-4.2\ninitial.eta_rho = -0.05\n".to_string(),
        ] {
            let c = parse_ok(&text);
            let c2 = parse_ok(&c.emit_text());
            assert_eq!(c, c2);
        }
    }

    #[test]
    fn sweep_points_validate_up_front() {
        // rho0 = 1.9 violates the eq-4.9 window for A = -1: 1.9 <= 2.
        let text = "\
metric.kind = acoustic
metric.radial = -1
metric.angular = 10
initial.rho0 = 2.5
initial.preset = eq-4.9
sweep.parameter = initial.rho0
sweep.values = 2.5, 1.9
";
        let errs = parse_errs(text);
        assert!(
            errs.iter().any(|e| e.message.contains("sweep point `initial.rho0 = 1.9` is invalid")),
            "got {errs:?}"
        );
    }

    #[test]
    fn with_parameter_substitutes_and_revalidates() {
        let c = parse_ok(KERR_PRESET);
        let at = c.with_parameter("metric.a", 1.05).unwrap();
        assert_eq!(at.model, MetricModel::kerr(1.0, 1.05).unwrap());
        assert!(at.sweep.is_none());
        assert!(c.with_parameter("metric.a", -0.5).is_err());
        assert!(c.with_parameter("output.dir", 1.0).is_err());
    }

    #[test]
    fn sampled_sweeps_parse_and_bound_check() {
        let ok = "\
metric.kind = kerr
metric.m = 1
metric.a = 1.1
initial.preset = eq-7.5
initial.rho0 = 2.0
sweep.parameter = metric.a
sweep.min = 1.02
sweep.max = 1.2
sweep.samples = 4
";
        let c = parse_ok(ok);
        assert_eq!(
            c.sweep.as_ref().unwrap().points,
            SweepPoints::Sampled { min: 1.02, max: 1.2, samples: 4 }
        );
        let bad = ok.replace("sweep.min = 1.02", "sweep.min = 1.3");
        let errs = parse_errs(&bad);
        assert!(errs.iter().any(|e| e.message.contains("below `sweep.max`")), "got {errs:?}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "metric.kind = kerr\nmetric.m 1\nmetric.a = \n";
        let errs = parse_errs(text);
        assert!(errs.iter().any(|e| e.line == Some(2) && e.message.contains("expected `key = value`")));
        assert!(errs.iter().any(|e| e.line == Some(3) && e.message.contains("empty value")));
    }

    proptest! {
        /// Emission is a normalizing inverse of parsing for arbitrary
        /// valid explicit-covector configs on both backends.
        #[test]
        fn round_trip_preserves_semantics(
            kerr in proptest::bool::ANY,
            rho0 in 1.5_f64..8.0,
            phi0 in -3.0_f64..3.0,
            z0 in 0.0_f64..2.0,
            eta_rho in -2.0_f64..2.0,
            eta_phi in -5.0_f64..-0.1,
            seed in 0_u64..1_000_000,
            max_x0 in 1.0_f64..500.0,
            plus in proptest::bool::ANY,
            forward in proptest::bool::ANY,
        ) {
            let metric = if kerr {
                "metric.kind = kerr\nmetric.m = 1\nmetric.a = 0.8\n".to_string()
            } else {
                "metric.kind = acoustic\nmetric.radial = -1\nmetric.angular = 10\n".to_string()
            };
            let z0 = if kerr { z0 + 0.001 } else { z0 };
            let text = format!(
                "{metric}initial.rho0 = {rho0}\ninitial.phi0 = {phi0}\ninitial.z0 = {z0}\n\
                 initial.eta_rho = {eta_rho}\ninitial.eta_phi = {eta_phi}\n\
                 run.branch = {}\nrun.direction = {}\nrun.seed = {seed}\nstop.max_x0 = {max_x0}\n",
                if plus { "plus" } else { "minus" },
                if forward { "forward" } else { "backward" },
            );
            let c = parse_config(&text).expect("generated config must be valid");
            let c2 = parse_config(&c.emit_text()).expect("emitted config must be valid");
            prop_assert_eq!(&c, &c2);
            prop_assert_eq!(c.emit_text(), c2.emit_text());
        }
    }
}
