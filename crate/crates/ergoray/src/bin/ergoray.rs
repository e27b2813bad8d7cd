//! Command-line front end: integrate configured ray families, sweep a
//! parameter, evaluate split energies, and locate turning structure.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 configuration
//! error, 3 numerical failure, 4 parameter-gate failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use ergoray::config::{InitialSpec, OutputFormat, PresetName, RunConfig, SweepPoints};
use ergoray::emit::{self, EmitError};
use ergoray::geodesic::{init_ray, integrate, Direction, GeodesicPath};
use ergoray::hamiltonian::Branch;
use ergoray::metric::MetricModel;
use ergoray::scenarios::{ScenarioError, ScenarioOutcome};
use ergoray::turning::{
    kerr_trapping_certificate, vortex_turning_asymptotic, vortex_turning_exact, TurningError,
};
use ergoray::{superradiance_report, BumpSpec, EnergyOptions, EnergyReport};

#[derive(Parser)]
#[command(
    name = "ergoray",
    version,
    about = "Null rays and energy splitting in ergoregion metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Trajectory file format (overrides `output.format`).
    #[arg(long, global = true, value_name = "csv|jsonl")]
    format: Option<String>,
    /// Random seed (overrides `run.seed`).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured rays; with a preset, also run and
    /// verify the matching experiment.
    Run { config: PathBuf },
    /// Run the configured one-parameter grid.
    Sweep { config: PathBuf },
    /// Evaluate the split energy of the configured wave packet.
    Energy { config: PathBuf },
    /// Locate turning radii or the trapping certificate of the family.
    Turning { config: PathBuf },
}

/// Failure classes, ordered by exit code.
enum CmdError {
    Io(String),
    Config(Vec<String>),
    Numerical(String),
    Gate(String),
}

impl CmdError {
    fn config(msg: impl Into<String>) -> Self {
        CmdError::Config(vec![msg.into()])
    }

    fn exit_code(&self) -> u8 {
        match self {
            CmdError::Io(_) => 1,
            CmdError::Config(_) => 2,
            CmdError::Numerical(_) => 3,
            CmdError::Gate(_) => 4,
        }
    }

    fn report(&self) {
        match self {
            CmdError::Io(m) => eprintln!("error: {m}"),
            CmdError::Config(ms) => {
                for m in ms {
                    eprintln!("config error: {m}");
                }
            }
            CmdError::Numerical(m) => eprintln!("numerical failure: {m}"),
            CmdError::Gate(m) => eprintln!("gate failure: {m}"),
        }
    }
}

impl From<EmitError> for CmdError {
    fn from(e: EmitError) -> Self {
        match e {
            EmitError::Io { .. } => CmdError::Io(e.to_string()),
            EmitError::NonFinite { .. } | EmitError::Csv { .. } => CmdError::Numerical(e.to_string()),
        }
    }
}

fn scenario_error(e: ScenarioError) -> CmdError {
    match e {
        ScenarioError::GateFailed(m) => CmdError::Gate(m),
        ScenarioError::Energy(ergoray::energy::EnergyError::SupportOutsideErgoregion {
            rho,
            z,
        }) => CmdError::Gate(format!("packet support leaves the ergoregion at rho={rho}, z={z}")),
        other => CmdError::Numerical(other.to_string()),
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Plus => "plus",
        Branch::Minus => "minus",
    }
}

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::Forward => "forward",
        Direction::Backward => "backward",
    }
}

/// Stable identifier of the configured family, used to name output
/// files; matches the id of the dispatched experiment when there is one.
fn scenario_id(cfg: &RunConfig) -> String {
    match (&cfg.initial, &cfg.model) {
        (InitialSpec::Preset { name, .. }, MetricModel::Acoustic { radial, .. }) => match name {
            PresetName::VortexSuperradiant if *radial > 0.0 => "white-hole-reversal".to_string(),
            PresetName::VortexSuperradiant => "vortex-superradiant".to_string(),
            PresetName::VortexShortLived => "vortex-short-lived".to_string(),
            PresetName::VortexNaked => "vortex-naked".to_string(),
            PresetName::RotatingAligned => "custom-acoustic".to_string(),
        },
        (InitialSpec::Preset { name, .. }, MetricModel::Kerr { mass, spin }) => match name {
            PresetName::RotatingAligned if cfg.start.z != 0.0 => "rotating-off-equatorial".to_string(),
            PresetName::RotatingAligned if spin < mass => "rotating-equatorial".to_string(),
            PresetName::RotatingAligned if spin == mass => "rotating-extremal".to_string(),
            PresetName::RotatingAligned => "rotating-naked".to_string(),
            _ => "custom-kerr".to_string(),
        },
        (InitialSpec::Explicit { .. }, MetricModel::Acoustic { .. }) => "custom-acoustic".to_string(),
        (InitialSpec::Explicit { .. }, MetricModel::Kerr { .. }) => "custom-kerr".to_string(),
    }
}

/// Run the experiment matching the configured preset, if any.
fn dispatch_scenario(cfg: &RunConfig) -> Option<Result<ScenarioOutcome, ScenarioError>> {
    let InitialSpec::Preset { name, eta_rho } = cfg.initial else {
        return None;
    };
    let rho0 = cfg.start.rho;
    Some(match (name, cfg.model) {
        (PresetName::VortexSuperradiant, MetricModel::Acoustic { radial, angular }) => {
            if radial < 0.0 {
                ergoray::run_acoustic_superradiant(radial, angular, rho0)
            } else {
                ergoray::run_white_hole(radial, angular, rho0)
            }
        }
        (PresetName::VortexShortLived, MetricModel::Acoustic { radial, angular }) => {
            ergoray::run_acoustic_shortlived(radial, angular, rho0)
        }
        (PresetName::VortexNaked, MetricModel::Acoustic { angular, .. }) => {
            let eta_rho = eta_rho.expect("validated: remark-4.2 carries eta_rho");
            ergoray::run_acoustic_naked(angular, rho0, eta_rho)
        }
        (PresetName::RotatingAligned, MetricModel::Kerr { mass, spin }) => {
            if cfg.start.z != 0.0 {
                ergoray::run_kerr_offequatorial(mass, spin, rho0, cfg.start.z)
            } else if spin < mass {
                ergoray::run_kerr_equatorial(mass, spin, rho0)
            } else {
                ergoray::run_kerr_extremal_and_naked(mass, spin, rho0)
            }
        }
        _ => unreachable!("preset/backend pairing is validated at parse time"),
    })
}

#[derive(Serialize)]
struct LegReport {
    branch: &'static str,
    direction: &'static str,
    samples: usize,
    terminal_event: Option<String>,
    final_x0: f64,
    final_rho: f64,
    final_z: f64,
    max_h_residual: f64,
    files: Vec<String>,
}

#[derive(Serialize)]
struct RunReport {
    command: &'static str,
    scenario_id: String,
    legs: Vec<LegReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    energy: Option<EnergyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<ScenarioOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    all_verified: Option<bool>,
}

fn leg_files(
    out_dir: &Path,
    stem: &str,
    cfg: &RunConfig,
    path: &GeodesicPath,
) -> Result<Vec<String>, CmdError> {
    let mut files = Vec::new();
    let mut write = |name: String, content: String| -> Result<(), CmdError> {
        emit::write_text(&out_dir.join(&name), &content)?;
        files.push(name);
        Ok(())
    };
    match cfg.output.format {
        OutputFormat::Csv => write(format!("{stem}.csv"), emit::path_csv(path)?)?,
        OutputFormat::Jsonl => write(format!("{stem}.jsonl"), emit::path_jsonl(path)?)?,
    }
    write(format!("{stem}.events.json"), emit::events_json(path)?)?;
    if cfg.output.plot_data {
        let (x0_rho, xy) = emit::plot_pair_files(path)?;
        write(format!("{stem}.x0-rho.dat"), x0_rho)?;
        write(format!("{stem}.xy.dat"), xy)?;
    }
    Ok(files)
}

/// Integrate every configured (branch, direction) leg, write its files,
/// and summarize it for the report.
fn integrate_legs(cfg: &RunConfig, out_dir: &Path, id: &str) -> Result<Vec<LegReport>, CmdError> {
    let stops = cfg.stop.to_stop_spec();
    let mut legs = Vec::new();
    for &branch in &cfg.branches {
        for &direction in &cfg.directions {
            let start = init_ray(&cfg.model, cfg.start, cfg.eta, branch, 0.0)
                .map_err(|e| CmdError::Numerical(e.to_string()))?;
            let path = integrate(&cfg.model, &start, direction, &stops)
                .map_err(|e| CmdError::Numerical(e.to_string()))?;
            let stem = format!("{id}-{}-{}", branch_name(branch), direction_name(direction));
            let files = leg_files(out_dir, &stem, cfg, &path)?;
            let last = path.samples.last().expect("integration yields at least the start sample");
            legs.push(LegReport {
                branch: branch_name(branch),
                direction: direction_name(direction),
                samples: path.samples.len(),
                terminal_event: path.events.last().map(|e| e.kind.name().to_string()),
                final_x0: last.x0,
                final_rho: last.point.rho,
                final_z: last.point.z,
                max_h_residual: path
                    .samples
                    .iter()
                    .map(|s| s.h_residual.abs())
                    .fold(0.0, f64::max),
                files,
            });
        }
    }
    Ok(legs)
}

fn energy_from_config(cfg: &RunConfig) -> Option<Result<EnergyReport, CmdError>> {
    let bump = cfg.bump.as_ref()?;
    let spec = BumpSpec::new(
        bump.center(),
        bump.halfwidth_rho,
        bump.halfwidth_phi,
        bump.halfwidth_z,
    );
    let options = EnergyOptions { order: bump.order, ..EnergyOptions::default() };
    Some(superradiance_report(&cfg.model, &spec, &cfg.eta, &options).map_err(|e| match e {
        ergoray::energy::EnergyError::BadBump(m) => CmdError::config(format!("invalid bump: {m}")),
        ergoray::energy::EnergyError::SupportOutsideErgoregion { .. } => CmdError::Gate(e.to_string()),
        other => CmdError::Numerical(other.to_string()),
    }))
}

/// The `run` subcommand on one (possibly substituted) config. Returns
/// the run summary and the name of the report file it wrote.
fn run_one(cfg: &RunConfig, quiet: bool) -> Result<(RunReport, String), CmdError> {
    let out_dir = PathBuf::from(&cfg.output.dir);
    let id = scenario_id(cfg);
    let legs = integrate_legs(cfg, &out_dir, &id)?;

    let scenario = match dispatch_scenario(cfg) {
        Some(Ok(outcome)) => Some(outcome),
        Some(Err(e)) => return Err(scenario_error(e)),
        None => None,
    };
    let energy = match energy_from_config(cfg) {
        Some(Ok(report)) => Some(report),
        Some(Err(e)) => return Err(e),
        None => None,
    };

    let all_verified = scenario.as_ref().map(|s| s.all_verified());
    let report = RunReport {
        command: "run",
        scenario_id: id.clone(),
        legs,
        energy,
        scenario,
        all_verified,
    };
    let report_name = format!("{id}-report.json");
    emit::write_text(&out_dir.join(&report_name), &emit::report_json(cfg, &report))?;

    if !quiet {
        for leg in &report.legs {
            println!(
                "{id}  {:<5} {:<8}  {:>6} samples  ends at x0 = {}, rho = {}  [{}]",
                leg.branch,
                leg.direction,
                leg.samples,
                leg.final_x0,
                leg.final_rho,
                leg.terminal_event.as_deref().unwrap_or("none"),
            );
        }
        if let Some(e) = &report.energy {
            println!(
                "energy: e_plus = {}, e_minus = {}, e_sum = {}, superradiant = {}",
                e.e_plus, e.e_minus, e.e_sum, e.superradiant
            );
        }
        if let Some(v) = report.all_verified {
            let n_checks = report.scenario.as_ref().map_or(0, |s| {
                s.checks.len() + s.legs.iter().map(|l| l.checks.len() + l.audits.len()).sum::<usize>()
            });
            println!("experiment checks: {n_checks} recorded, all verified: {v}");
        }
        println!("report: {}", out_dir.join(&report_name).display());
    }
    Ok((report, report_name))
}

fn cmd_run(cfg: &RunConfig) -> Result<(), CmdError> {
    if cfg.sweep.is_some() {
        return Err(CmdError::config(
            "this config declares a sweep; use `ergoray sweep` to run it",
        ));
    }
    run_one(cfg, false).map(|_| ())
}

#[derive(Serialize)]
struct SweepPointReport {
    value: f64,
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    all_verified: Option<bool>,
    report_file: String,
}

#[derive(Serialize)]
struct SweepReport {
    command: &'static str,
    parameter: String,
    values: Vec<f64>,
    points: Vec<SweepPointReport>,
}

fn sweep_values(cfg: &RunConfig) -> Result<(String, Vec<f64>), CmdError> {
    let Some(sweep) = &cfg.sweep else {
        return Err(CmdError::config(
            "this config declares no sweep; add `sweep.parameter` and a grid, or use `ergoray run`",
        ));
    };
    let values = match &sweep.points {
        SweepPoints::Values { values } => values.clone(),
        SweepPoints::Sampled { min, max, samples } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut v: Vec<f64> = (0..*samples).map(|_| rng.gen_range(*min..=*max)).collect();
            v.sort_by(f64::total_cmp);
            v
        }
    };
    Ok((sweep.parameter.clone(), values))
}

fn cmd_sweep(cfg: &RunConfig) -> Result<(), CmdError> {
    let (parameter, values) = sweep_values(cfg)?;

    // Substitute every point up front so the whole grid is validated
    // before any integration starts.
    let mut points: Vec<RunConfig> = Vec::with_capacity(values.len());
    let mut errors: Vec<String> = Vec::new();
    let short = parameter.rsplit('.').next().unwrap_or(&parameter).to_string();
    for &v in &values {
        match cfg.with_parameter(&parameter, v) {
            Ok(mut point) => {
                // Distinct files per point: suffix the output names with
                // the substituted value.
                point.output.dir = cfg.output.dir.clone();
                points.push(point);
            }
            Err(errs) => {
                for e in errs {
                    errors.push(format!("sweep point `{parameter} = {v}`: {}", e.message));
                }
            }
        }
    }
    if !errors.is_empty() {
        return Err(CmdError::Config(errors));
    }

    // Scoped workers pull indices from a shared counter; each point
    // writes only its own files, and results are assembled in grid
    // order afterwards.
    let results: Vec<Mutex<Option<Result<(RunReport, String), CmdError>>>> =
        (0..points.len()).map(|_| Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(points.len().max(1));
    let point_id = |point: &RunConfig, v: f64| format!("{}-{short}-{v}", scenario_id(point));
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= points.len() {
                    break;
                }
                let point = &points[i];
                let result = run_point(point, &point_id(point, values[i]));
                *results[i].lock().expect("sweep result slot") = Some(result);
            });
        }
    });

    let mut report_points = Vec::with_capacity(points.len());
    let mut first_error: Option<CmdError> = None;
    for (i, slot) in results.into_iter().enumerate() {
        let result = slot.into_inner().expect("sweep result slot").expect("worker filled every slot");
        match result {
            Ok((run, report_file)) => {
                println!(
                    "{} = {}  id = {}  verified = {}",
                    parameter,
                    values[i],
                    run.scenario_id,
                    run.all_verified.map_or("n/a".to_string(), |v| v.to_string()),
                );
                report_points.push(SweepPointReport {
                    value: values[i],
                    id: run.scenario_id,
                    all_verified: run.all_verified,
                    report_file,
                });
            }
            Err(e) => {
                eprintln!("sweep point `{parameter} = {}` failed:", values[i]);
                e.report();
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_error {
        return Err(match e {
            CmdError::Io(m) => CmdError::Io(m),
            CmdError::Config(m) => CmdError::Config(m),
            CmdError::Numerical(m) => CmdError::Numerical(m),
            CmdError::Gate(m) => CmdError::Gate(m),
        });
    }

    let summary = SweepReport { command: "sweep", parameter, values, points: report_points };
    let out_dir = PathBuf::from(&cfg.output.dir);
    let name = format!("sweep-{}-summary.json", short);
    emit::write_text(&out_dir.join(&name), &emit::report_json(cfg, &summary))?;
    println!("sweep summary: {}", out_dir.join(&name).display());
    Ok(())
}

/// One sweep point: like `run_one` but with file stems carrying the
/// substituted value so points never collide.
fn run_point(cfg: &RunConfig, stem_id: &str) -> Result<(RunReport, String), CmdError> {
    let out_dir = PathBuf::from(&cfg.output.dir);
    let legs = integrate_legs(cfg, &out_dir, stem_id)?;
    let scenario = match dispatch_scenario(cfg) {
        Some(Ok(outcome)) => Some(outcome),
        Some(Err(e)) => return Err(scenario_error(e)),
        None => None,
    };
    let energy = match energy_from_config(cfg) {
        Some(Ok(report)) => Some(report),
        Some(Err(e)) => return Err(e),
        None => None,
    };
    let all_verified = scenario.as_ref().map(|s| s.all_verified());
    let report = RunReport {
        command: "run",
        scenario_id: scenario_id(cfg),
        legs,
        energy,
        scenario,
        all_verified,
    };
    let report_name = format!("{stem_id}-report.json");
    emit::write_text(&out_dir.join(&report_name), &emit::report_json(cfg, &report))?;
    Ok((report, report_name))
}

fn cmd_energy(cfg: &RunConfig) -> Result<(), CmdError> {
    if cfg.sweep.is_some() {
        return Err(CmdError::config("this config declares a sweep; use `ergoray sweep`"));
    }
    let Some(result) = energy_from_config(cfg) else {
        return Err(CmdError::config(
            "energy needs a packet: set `bump.halfwidth_rho` and `bump.halfwidth_phi`",
        ));
    };
    let report = result?;
    let id = scenario_id(cfg);
    let out_dir = PathBuf::from(&cfg.output.dir);
    let name = format!("{id}-energy.json");
    emit::write_text(&out_dir.join(&name), &emit::report_json(cfg, &report))?;
    println!(
        "e_plus = {}, e_minus = {}, e_sum = {}, additivity residual = {}",
        report.e_plus, report.e_minus, report.e_sum, report.additivity_residual
    );
    println!("superradiant: {}", report.superradiant);
    println!("report: {}", out_dir.join(&name).display());
    Ok(())
}

#[derive(Serialize)]
struct TurningBranchReport {
    branch: &'static str,
    xi0: f64,
    discriminant: f64,
    /// Exact turning radii, ascending.
    radii: Vec<f64>,
    /// Large-circulation approximations to the same radii.
    asymptotic_radii: Vec<f64>,
}

#[derive(Serialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
enum TurningReport {
    Acoustic { branches: Vec<TurningBranchReport> },
    Kerr { certificate: ergoray::TrappingCertificate },
}

fn turning_error(e: TurningError) -> CmdError {
    match e {
        TurningError::WrongBackend => CmdError::config(e.to_string()),
        TurningError::NoAngularMomentum => CmdError::Gate(e.to_string()),
        TurningError::Metric(m) => CmdError::Numerical(m.to_string()),
    }
}

fn cmd_turning(cfg: &RunConfig) -> Result<(), CmdError> {
    if cfg.sweep.is_some() {
        return Err(CmdError::config("this config declares a sweep; use `ergoray sweep`"));
    }
    let rho0 = cfg.start.rho;
    let report = match cfg.model {
        MetricModel::Acoustic { .. } => {
            let mut branches = Vec::new();
            for &branch in &cfg.branches {
                let exact =
                    vortex_turning_exact(&cfg.model, rho0, &cfg.eta, branch).map_err(turning_error)?;
                let asymptotic = vortex_turning_asymptotic(&cfg.model, rho0, &cfg.eta, branch)
                    .map_err(turning_error)?;
                println!(
                    "{}: xi0 = {}, turning radii {:?} (asymptotic {:?})",
                    branch_name(branch),
                    exact.xi0,
                    exact.radii,
                    asymptotic
                );
                branches.push(TurningBranchReport {
                    branch: branch_name(branch),
                    xi0: exact.xi0,
                    discriminant: exact.discriminant,
                    radii: exact.radii,
                    asymptotic_radii: asymptotic,
                });
            }
            TurningReport::Acoustic { branches }
        }
        MetricModel::Kerr { .. } => {
            let certificate = kerr_trapping_certificate(&cfg.model, rho0).map_err(turning_error)?;
            println!(
                "trapping certificate: xi0 = {}, delta2(start) = {}, delta2(ergosphere) = {}, trapped = {}",
                certificate.xi0,
                certificate.delta2_start,
                certificate.delta2_ergosphere,
                certificate.trapped
            );
            TurningReport::Kerr { certificate }
        }
    };
    let id = scenario_id(cfg);
    let out_dir = PathBuf::from(&cfg.output.dir);
    let name = format!("{id}-turning.json");
    emit::write_text(&out_dir.join(&name), &emit::report_json(cfg, &report))?;
    println!("report: {}", out_dir.join(&name).display());
    Ok(())
}

fn load_config(path: &Path, cli: &Cli) -> Result<RunConfig, CmdError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CmdError::config(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut cfg = match ergoray::parse_config(&text) {
        Ok(cfg) => cfg,
        Err(errs) => {
            return Err(CmdError::Config(errs.into_iter().map(|e| e.to_string()).collect()));
        }
    };
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.display().to_string();
    }
    if let Some(fmt) = &cli.format {
        cfg.output.format = OutputFormat::from_name(fmt).ok_or_else(|| {
            CmdError::config(format!("--format must be `csv` or `jsonl`, got `{fmt}`"))
        })?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config_path = match &cli.command {
        Command::Run { config }
        | Command::Sweep { config }
        | Command::Energy { config }
        | Command::Turning { config } => config.clone(),
    };
    let result = load_config(&config_path, &cli).and_then(|cfg| match &cli.command {
        Command::Run { .. } => cmd_run(&cfg),
        Command::Sweep { .. } => cmd_sweep(&cfg),
        Command::Energy { .. } => cmd_energy(&cfg),
        Command::Turning { .. } => cmd_turning(&cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}
