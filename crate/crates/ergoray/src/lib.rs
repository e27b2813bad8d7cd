//! Null-ray integration and energy bookkeeping for stationary metrics
//! with ergoregions.
//!
//! The crate integrates null bicharacteristics (sound rays / light rays)
//! of stationary, axisymmetric Lorentzian metrics, detects the events
//! that organize their global behavior (turning points, horizon and
//! ergosphere crossings, escape, capture), and evaluates the conserved
//! energy of wave packets split across the two dispersion branches.
//! Two backends are provided: a planar vortex acoustic flow and the
//! rotating black hole in horizon-regular coordinates.

pub mod config;
pub mod emit;
pub mod energy;
pub mod fits;
pub mod geodesic;
pub mod hamiltonian;
pub mod metric;
pub(crate) mod ode;
pub mod quadrature;
pub mod scenarios;
pub mod turning;

pub use config::{
    parse_config, BumpConfig, ConfigError, InitialSpec, OutputConfig, OutputFormat, PresetName,
    RunConfig, StopConfig, SweepConfig, SweepPoints, SCHEMA_VERSION,
};
pub use emit::{
    events_json, parse_path_csv, path_csv, path_jsonl, plot_pair_files, report_json, write_text,
    EmitError, SampleRow, Tolerances, CSV_HEADER,
};
pub use energy::{
    energy_branch, energy_sum, superradiance_report, BumpSpec, EnergyOptions, EnergyReport,
};
pub use fits::{FitLaw, FitRecord};
pub use geodesic::{
    integrate, init_ray, Direction, Event, EventKind, GeodesicPath, PathSample, RayStart,
    StopSpec,
};
pub use hamiltonian::{Branch, Covector, HGradient, LambdaRoots};
pub use metric::{kerr_r, MetricError, MetricFields, MetricModel, Region, SpatialPoint};
pub use scenarios::{
    run_acoustic_naked, run_acoustic_shortlived, run_acoustic_superradiant, run_kerr_equatorial,
    run_kerr_extremal_and_naked, run_kerr_offequatorial, run_white_hole, AuditRecord, CheckRecord,
    Classification, EventStamp, LegOutcome, ScenarioError, ScenarioOutcome,
};
pub use turning::{
    kerr_trapping_certificate, vortex_turning_asymptotic, vortex_turning_exact,
    TrappingCertificate, TurningError, TurningRadii,
};
