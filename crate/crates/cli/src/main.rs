//! `ovrv` — command-line front end for the car-following toolkit.
//!
//! Every subcommand is deterministic given its flags (and seed, where one
//! applies): rerunning a command overwrites its outputs bit-identically.
//! Outputs are plot-ready CSV/JSON data files; rendering is left to external
//! tools.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numerical failure
//! (singular configuration or a calibration where no start converged).

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ovrv::{
    analyze, bode_curve, calibrate, colocated_stats, pair_logs, read_profile_csv, simulate_platoon,
    stability_sweep, write_gain_csv, write_profile_csv, write_sweep_csv, BuiltinProfile,
    CalibrationConfig, CalibrationProblem, GpsLog, Integrator, ModelParams, PairOptions,
    PlatoonScenario, ProfileSpec, Segment, Trajectory, Transition, UniformSeries,
    DEFAULT_BODE_POINTS, DEFAULT_BODE_RANGE,
};

#[derive(Parser)]
#[command(
    name = "ovrv",
    version,
    about = "Simulate, analyze, and calibrate the constant-time-gap OVRV car-following model",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a platoon behind a synthetic or recorded lead profile
    Simulate(SimulateArgs),
    /// String-stability report, Bode curve, or parameter-plane sweep
    Stability(StabilityArgs),
    /// Fit model parameters to trajectory CSVs by multi-start optimization
    Calibrate(CalibrateArgs),
    /// Emit a built-in lead velocity profile as CSV
    Profile(ProfileArgs),
    /// Pair two GPS logs into a lead/follower trajectory CSV
    Ingest(IngestArgs),
    /// Accuracy statistics for two GPS logs a known distance apart
    Validate(ValidateArgs),
}

/// Model parameters, from a JSON file and/or individual overrides.
#[derive(Args)]
struct ParamArgs {
    /// JSON file: {"k1": .., "k2": .., "tau_e": .., "eta": ..}
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Gap-error gain [1/s^2]; overrides the file
    #[arg(long)]
    k1: Option<f64>,
    /// Relative-velocity gain [1/s]; overrides the file
    #[arg(long)]
    k2: Option<f64>,
    /// Effective time-gap [s]; overrides the file
    #[arg(long = "tau-e")]
    tau_e: Option<f64>,
    /// Jam distance [m]; overrides the file
    #[arg(long)]
    eta: Option<f64>,
}

impl ParamArgs {
    fn resolve(&self) -> CliResult<ModelParams> {
        let base: Option<ModelParams> = match &self.params {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read params file {}: {e}", path.display()))
                })?;
                Some(serde_json::from_str(&text).map_err(|e| {
                    CliError::Usage(format!("invalid params file {}: {e}", path.display()))
                })?)
            }
            None => None,
        };
        let field = |name: &str, over: Option<f64>, base_val: Option<f64>| {
            over.or(base_val).ok_or_else(|| {
                CliError::Usage(format!(
                    "missing parameter `{name}`: pass --params FILE or --{} VALUE",
                    name.replace('_', "-")
                ))
            })
        };
        let p = ModelParams::new(
            field("k1", self.k1, base.as_ref().map(|p| p.k1()))?,
            field("k2", self.k2, base.as_ref().map(|p| p.k2()))?,
            field("tau_e", self.tau_e, base.as_ref().map(|p| p.tau_e()))?,
            field("eta", self.eta, base.as_ref().map(|p| p.eta()))?,
        )?;
        Ok(p)
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum IntegratorArg {
    Euler,
    Rk4,
}

impl From<IntegratorArg> for Integrator {
    fn from(v: IntegratorArg) -> Integrator {
        match v {
            IntegratorArg::Euler => Integrator::Euler,
            IntegratorArg::Rk4 => Integrator::Rk4,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Built-in lead profile: A-I, or `step` (20 -> 15 -> 20 m/s)
    #[arg(long, conflicts_with = "lead_csv")]
    profile: Option<String>,
    /// Recorded lead profile CSV (t,velocity_mps); resampled to --dt
    #[arg(long, value_name = "FILE")]
    lead_csv: Option<PathBuf>,
    /// Number of identical followers
    #[arg(long, default_value_t = 1)]
    followers: usize,
    /// Integration and sampling step [s]
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// Repetitions of the profile's oscillation/schedule
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    /// Truncate the run to this many seconds
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long, value_enum, default_value_t = IntegratorArg::Euler)]
    integrator: IntegratorArg,
    /// Directory for platoon.csv and summary.json
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Also write bode.csv (omega_rad_s,gain_db)
    #[arg(long)]
    bode: bool,
    #[arg(long, default_value_t = DEFAULT_BODE_RANGE.0)]
    omega_min: f64,
    #[arg(long, default_value_t = DEFAULT_BODE_RANGE.1)]
    omega_max: f64,
    #[arg(long, default_value_t = DEFAULT_BODE_POINTS)]
    points: usize,
    /// Sweep the gain plane instead: k1=LO:HI k2=LO:HI tau_e=V1,V2,...
    #[arg(long, num_args = 3, value_name = "AXIS")]
    sweep: Option<Vec<String>>,
    /// Grid resolution per gain axis for --sweep
    #[arg(long, default_value_t = 50)]
    resolution: usize,
    /// Directory for report.json / bode.csv / sweep.csv
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Directory of trajectory CSVs (t_s,v_lead_mps,v_follow_mps,space_gap_m)
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    /// RNG seed for the multi-start draw (required for reproducibility)
    #[arg(long)]
    seed: u64,
    /// Number of random starting points
    #[arg(long, default_value_t = 100)]
    starts: usize,
    /// Leading fraction of each trajectory used for fitting
    #[arg(long, default_value_t = 0.5)]
    split: f64,
    /// Data/integration grid step [s]
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// Iteration cap per optimizer run
    #[arg(long, default_value_t = 2000)]
    max_iterations: usize,
    /// Directory for calibration.json and errors.csv
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    /// Profile name (A-I)
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// Repetitions of the profile's schedule
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    /// Output CSV path (default: profile_<NAME>.csv)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Lead vehicle GPS CSV (t_s,lat_deg,lon_deg,vel_mps)
    #[arg(long, value_name = "FILE")]
    lead: PathBuf,
    /// Follower GPS CSV
    #[arg(long, value_name = "FILE")]
    follow: PathBuf,
    /// Lead vehicle length [m], subtracted from the antenna distance
    #[arg(long, default_value_t = 0.0)]
    lead_length: f64,
    /// Antenna-to-bumper correction [m], also subtracted
    #[arg(long, default_value_t = 0.0)]
    antenna_offset: f64,
    /// Output grid step [s]
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// Largest tolerated spacing between consecutive fixes [s]
    #[arg(long, default_value_t = 1.0)]
    max_gap: f64,
    /// Nominal GPS sample rate [Hz]
    #[arg(long, default_value_t = 10.0)]
    rate: f64,
    #[arg(long, default_value = "trajectory.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_name = "FILE")]
    log_a: PathBuf,
    #[arg(long, value_name = "FILE")]
    log_b: PathBuf,
    /// Known antenna separation [m] (0 for co-located sensors)
    #[arg(long, default_value_t = 0.0)]
    true_separation: f64,
    /// Nominal GPS sample rate [Hz]
    #[arg(long, default_value_t = 10.0)]
    rate: f64,
    #[arg(long, default_value = "validation.json")]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Core(ovrv::Error),
}

type CliResult<T> = Result<T, CliError>;

impl From<ovrv::Error> for CliError {
    fn from(e: ovrv::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(ovrv::Error::Io(e))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => {
                if e.is_numerical() {
                    3
                } else {
                    2
                }
            }
        }
    }
}

/// Write a file via a temporary sibling and an atomic rename, so a crashed
/// run never leaves a truncated output behind.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path)
        .map_err(|e| CliError::Core(ovrv::Error::Io(e.error)))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(ovrv::Error::from)?;
        writeln!(w)?;
        Ok(())
    })
}

/// The fixed step schedule used by the amplification demo: cruise at 20 m/s,
/// drop to 15, recover.
fn step_schedule(dt: f64) -> ProfileSpec {
    ProfileSpec::StepSchedule {
        segments: vec![
            Segment::new(20.0, 60.0),
            Segment::new(15.0, 60.0),
            Segment::new(20.0, 180.0),
        ],
        dt,
        transition: Transition::Instantaneous,
    }
}

fn load_lead(args: &SimulateArgs) -> CliResult<UniformSeries> {
    match (&args.profile, &args.lead_csv) {
        (Some(name), None) => {
            if name.eq_ignore_ascii_case("step") {
                return Ok(ovrv::generate(&step_schedule(args.dt))?);
            }
            let profile = BuiltinProfile::from_str(name)
                .map_err(|e| CliError::Usage(format!("{e} (or `step`)")))?;
            Ok(profile.series(args.dt, args.cycles)?)
        }
        (None, Some(path)) => {
            let file = fs::File::open(path).map_err(|e| {
                CliError::Usage(format!("cannot read lead CSV {}: {e}", path.display()))
            })?;
            Ok(read_profile_csv(file)?.resample(args.dt)?)
        }
        _ => Err(CliError::Usage(
            "pass exactly one lead source: --profile NAME or --lead-csv FILE".into(),
        )),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let params = args.params.resolve()?;
    let lead = load_lead(args)?;
    let mut scenario = PlatoonScenario::homogeneous(lead, params, args.followers);
    scenario.duration = args.duration;
    scenario.integrator = args.integrator.into();
    let result = simulate_platoon(&scenario)?;

    write_atomic(&args.out_dir.join("platoon.csv"), |w| {
        Ok(result.write_csv(w)?)
    })?;
    write_json(&args.out_dir.join("summary.json"), &result.summary())?;
    Ok(())
}

/// Parse `name=LO:HI` into a range.
fn parse_range(spec: &str, name: &str) -> CliResult<(f64, f64)> {
    let usage = || {
        CliError::Usage(format!(
            "invalid sweep axis `{spec}`: expected {name}=LO:HI (e.g. {name}=0.1:1)"
        ))
    };
    let value = spec
        .strip_prefix(name)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(usage)?;
    let (lo, hi) = value.split_once(':').ok_or_else(usage)?;
    let lo: f64 = lo.parse().map_err(|_| usage())?;
    let hi: f64 = hi.parse().map_err(|_| usage())?;
    Ok((lo, hi))
}

/// Parse `tau_e=V1,V2,...` into a list.
fn parse_list(spec: &str) -> CliResult<Vec<f64>> {
    let usage = || {
        CliError::Usage(format!(
            "invalid sweep axis `{spec}`: expected tau_e=V1,V2,... (e.g. tau_e=0.5,1,2)"
        ))
    };
    let value = spec
        .strip_prefix("tau_e")
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(usage)?;
    value
        .split(',')
        .map(|v| v.parse::<f64>().map_err(|_| usage()))
        .collect()
}

fn cmd_stability(args: &StabilityArgs) -> CliResult<()> {
    if let Some(axes) = &args.sweep {
        let k1 = parse_range(&axes[0], "k1")?;
        let k2 = parse_range(&axes[1], "k2")?;
        let tau_e = parse_list(&axes[2])?;
        let cells = stability_sweep(k1, k2, &tau_e, args.resolution)?;
        return write_atomic(&args.out_dir.join("sweep.csv"), |w| {
            Ok(write_sweep_csv(&cells, w)?)
        });
    }

    let params = args.params.resolve()?;
    let report = analyze(&params)?;
    write_json(&args.out_dir.join("report.json"), &report)?;
    if args.bode {
        let curve = bode_curve(&params, args.omega_min, args.omega_max, args.points)?;
        write_atomic(&args.out_dir.join("bode.csv"), |w| {
            Ok(write_gain_csv(&curve, w)?)
        })?;
    }
    Ok(())
}

fn cmd_calibrate(args: &CalibrateArgs) -> CliResult<()> {
    let entries = fs::read_dir(&args.data).map_err(|e| {
        CliError::Usage(format!(
            "cannot read data directory {}: {e}",
            args.data.display()
        ))
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort(); // deterministic trajectory order
    if paths.is_empty() {
        return Err(CliError::Usage(format!(
            "no trajectory CSV files found in {}",
            args.data.display()
        )));
    }

    let mut trajectories = Vec::with_capacity(paths.len());
    for path in &paths {
        let file = fs::File::open(path)?;
        let mut traj = Trajectory::read_csv(file).map_err(|e| match e {
            ovrv::Error::Format(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
            other => CliError::Core(other),
        })?;
        traj.meta.label = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        trajectories.push(traj);
    }

    let config = CalibrationConfig {
        dt: args.dt,
        n_starts: args.starts,
        seed: args.seed,
        split: args.split,
        max_iterations: args.max_iterations,
        ..CalibrationConfig::default()
    };
    let problem = CalibrationProblem::new(trajectories, config)?;
    let result = calibrate(&problem)?;

    write_json(&args.out_dir.join("calibration.json"), &result)?;
    write_atomic(&args.out_dir.join("errors.csv"), |w| {
        Ok(result.table.write_csv(w)?)
    })?;
    Ok(())
}

fn cmd_profile(args: &ProfileArgs) -> CliResult<()> {
    let profile =
        BuiltinProfile::from_str(&args.name).map_err(|e| CliError::Usage(e.to_string()))?;
    let series = profile.series(args.dt, args.cycles)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("profile_{profile}.csv")));
    write_atomic(&out, |w| Ok(write_profile_csv(&series, w)?))
}

fn read_gps(path: &Path, rate: f64) -> CliResult<GpsLog> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Usage(format!("cannot read GPS CSV {}: {e}", path.display())))?;
    Ok(GpsLog::read_csv(file, rate)?)
}

fn cmd_ingest(args: &IngestArgs) -> CliResult<()> {
    let lead = read_gps(&args.lead, args.rate)?;
    let follow = read_gps(&args.follow, args.rate)?;
    let options = PairOptions {
        dt: args.dt,
        lead_length_m: args.lead_length,
        antenna_offset_m: args.antenna_offset,
        max_gap_s: args.max_gap,
    };
    let trajectory = pair_logs(&lead, &follow, &options)?;
    for warning in &trajectory.meta.warnings {
        eprintln!("warning: {warning}");
    }
    write_atomic(&args.out, |w| Ok(trajectory.write_csv(w)?))
}

fn cmd_validate(args: &ValidateArgs) -> CliResult<()> {
    let a = read_gps(&args.log_a, args.rate)?;
    let b = read_gps(&args.log_b, args.rate)?;
    let report = colocated_stats(&a, &b, args.true_separation)?;
    write_json(&args.out, &report)
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Stability(args) => cmd_stability(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Profile(args) => cmd_profile(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
