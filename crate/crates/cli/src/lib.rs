//! Command-line frontend for `risnet`.
//!
//! [`Cli`] holds the clap definitions and [`execute`] runs a parsed command,
//! returning the primary output as a string. Side outputs (the state map of
//! `pattern`) are written by the command itself.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use risnet::array::{
    array_factor, build_array, led_color, normalized_db, pattern_csv, power_consumption_uw, steering_codebook,
    theta_cut, ArrayError,
};
use risnet::gating::{normalize_to_plate, time_gate, GateSpec, GatingError, Sweep};
use risnet::loads::{
    sp8t_load_profile, spdt_load_profile, stub_load_profile, synthesize_stub_lengths, DesignDocument, LoadError,
    MicrostripLine, SwitchModel, SynthesisOptions,
};
use risnet::metrics::{bandwidth, select_states, MetricsError};
use risnet::network::{profile_from_network, NetworkError};
use risnet::touchstone::{
    load_state_csv, read_touchstone, serialize_touchstone, write_state_csv, DataFormat, FrequencyUnit, PortNetwork,
    ProfileError, ReflectionProfile, TouchstoneError,
};

/// n78 allocation in Germany.
pub const DEFAULT_BAND_LOW_HZ: f64 = 3.3e9;
pub const DEFAULT_BAND_HIGH_HZ: f64 = 3.8e9;
pub const DEFAULT_F_CENTER_HZ: f64 = 3.6e9;
/// Stub width used for the built-in 3-bit load set.
pub const DEFAULT_STUB_WIDTH_MM: f64 = 1.5;
/// States kept by `--virtual-2bit`.
pub const VIRTUAL_2BIT_STATES: [usize; 4] = [0, 2, 4, 6];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

fn network_error_is_numerical(e: &NetworkError) -> bool {
    match e {
        NetworkError::Singular { .. } | NetworkError::NonFinite => true,
        NetworkError::AtPoint { source, .. } => network_error_is_numerical(source),
        NetworkError::OutOfRange { .. } | NetworkError::NotTwoPort(_) | NetworkError::Profile(_) => false,
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        if network_error_is_numerical(&e) {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Search { .. } => CliError::Numerical(e.to_string()),
            LoadError::Network(inner) => inner.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::NonPositiveSigma(_) | MetricsError::NonFinitePhase => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<GatingError> for CliError {
    fn from(e: GatingError) -> Self {
        match e {
            GatingError::ReferenceUnderflow { .. } => CliError::Numerical(e.to_string()),
            GatingError::InvalidGate(_) => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ArrayError> for CliError {
    fn from(e: ArrayError) -> Self {
        match e {
            ArrayError::Theta(_) | ArrayError::NoTiles(..) | ArrayError::Resolution(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<TouchstoneError> for CliError {
    fn from(e: TouchstoneError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "risnet", version, about = "Network-level RIS modeling toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Lower band edge in Hz.
    #[arg(long, global = true, default_value_t = DEFAULT_BAND_LOW_HZ)]
    pub band_low_hz: f64,
    /// Upper band edge in Hz.
    #[arg(long, global = true, default_value_t = DEFAULT_BAND_HIGH_HZ)]
    pub band_high_hz: f64,
    /// Design/center frequency in Hz.
    #[arg(long, global = true, default_value_t = DEFAULT_F_CENTER_HZ)]
    pub f_center_hz: f64,
    /// Phase resolution; defaults to the state count of the input.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..=3))]
    pub bits: Option<u32>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Record the generation time in the output metadata.
    #[arg(long, global = true)]
    pub stamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize a Touchstone file, state CSV or sweep CSV.
    Parse { file: PathBuf },
    /// Per-state reflection of a unit cell terminated by a load set.
    Profile(ProfileArgs),
    /// Synthesize SP8T stub lengths.
    Synth(SynthArgs),
    /// Phase-resolution bandwidth of a state profile.
    Bandwidth(BandwidthArgs),
    /// Steering codebook and far-field θ cut.
    Pattern(PatternArgs),
    /// Time-gate a reflection sweep, optionally normalizing to a plate.
    Gate(GateArgs),
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Unit-cell 2-port Touchstone file.
    pub unit_cell: PathBuf,
    /// `ideal-1bit`, `ideal-3bit`, a design JSON, or a switch `.s2p`.
    #[arg(long)]
    pub loads: String,
    /// Switch path `.s2p` used with the built-in or JSON load sets.
    #[arg(long)]
    pub switch: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Switch path `.s2p`; ideal when omitted.
    #[arg(long)]
    pub switch: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_STUB_WIDTH_MM)]
    pub width_mm: f64,
    #[arg(long, default_value_t = risnet::loads::FR4_THICKNESS * 1e3)]
    pub height_mm: f64,
    #[arg(long, default_value_t = risnet::loads::FR4_EPSILON_R)]
    pub epsilon_r: f64,
    /// Line loss in dB/m at `--loss-ref-hz`.
    #[arg(long, default_value_t = 0.0)]
    pub loss_db_per_m: f64,
    #[arg(long, default_value_t = 1e9)]
    pub loss_ref_hz: f64,
    /// Frequencies across the band in the fit; 1 fits at the center only.
    #[arg(long, default_value_t = 1)]
    pub band_points: usize,
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    /// State CSV (`freq_hz,state,mag_db,phase_deg`).
    pub profile: PathBuf,
    /// Keep states 0, 2, 4 and 6 of an 8-state profile.
    #[arg(long)]
    pub virtual_2bit: bool,
}

#[derive(Debug, Args)]
pub struct PatternArgs {
    /// State CSV with 2 or 8 states.
    pub profile: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub tiles_x: usize,
    #[arg(long, default_value_t = 6)]
    pub tiles_y: usize,
    /// Steering elevation in degrees; negative values steer toward φ + 180°.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta_deg: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi_deg: f64,
    /// Evaluation frequency; defaults to `--f-center-hz`.
    #[arg(long)]
    pub freq_hz: Option<f64>,
    #[arg(long, default_value_t = -90.0, allow_negative_numbers = true)]
    pub theta_start: f64,
    #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
    pub theta_stop: f64,
    #[arg(long, default_value_t = 0.5)]
    pub theta_step: f64,
    /// Azimuth of the θ cut; defaults to the steering azimuth.
    #[arg(long, allow_negative_numbers = true)]
    pub cut_phi_deg: Option<f64>,
    /// Exponent q of the cos^q θ element pattern.
    #[arg(long, default_value_t = 1.0)]
    pub element_exponent: f64,
    /// Write the state map here (`.json` for JSON, text otherwise).
    #[arg(long)]
    pub state_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GateArgs {
    /// Sweep as 1-port Touchstone or `freq_hz,re,im` CSV.
    pub sweep: PathBuf,
    #[arg(long)]
    pub gate_start_ns: f64,
    #[arg(long)]
    pub gate_stop_ns: f64,
    #[arg(long, default_value_t = 0.25)]
    pub edge_fraction: f64,
    #[arg(long, default_value_t = 6.0)]
    pub kaiser_beta: f64,
    /// Metal-plate reference sweep on the same grid.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Divide by the gated reference (plate taken as Γ = −1).
    #[arg(long)]
    pub normalize: bool,
}

/// Band and center shared by all subcommands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub band: (f64, f64),
    pub f_center: f64,
}

impl RunConfig {
    pub fn new(band_low: f64, band_high: f64, f_center: f64) -> Result<Self, CliError> {
        if !(band_low.is_finite() && band_high.is_finite() && band_low > 0.0 && band_low < band_high) {
            return Err(CliError::Usage(format!(
                "band must satisfy 0 < low < high, got [{band_low}, {band_high}] Hz"
            )));
        }
        if !(band_low..=band_high).contains(&f_center) {
            return Err(CliError::Usage(format!(
                "center {f_center} Hz outside band [{band_low}, {band_high}] Hz"
            )));
        }
        Ok(Self {
            band: (band_low, band_high),
            f_center,
        })
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default()
}

fn is_touchstone(path: &Path) -> bool {
    let ext = extension(path);
    ext.len() >= 3 && ext.starts_with('s') && ext.ends_with('p')
}

fn to_json<T: Serialize>(value: &T, stamp: bool) -> Result<String, CliError> {
    let mut value = serde_json::to_value(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    if stamp {
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("generated_unix_s".into(), unix_time().into());
        }
    }
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn unix_time() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn stamp_line(stamp: bool) -> String {
    if stamp {
        format!("# generated_unix_s={}\n", unix_time())
    } else {
        String::new()
    }
}

fn read_switch(path: &Path) -> Result<SwitchModel, CliError> {
    Ok(SwitchModel::from_network(read_touchstone(path)?)?)
}

fn read_profile(path: &Path) -> Result<ReflectionProfile, CliError> {
    Ok(load_state_csv(&read_text(path)?)?)
}

fn reject_format(format: Option<OutputFormat>, allowed: &[OutputFormat], command: &str) -> Result<(), CliError> {
    match format {
        Some(f) if !allowed.contains(&f) => Err(CliError::Usage(format!(
            "`{command}` does not support --format {}",
            f.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
        ))),
        _ => Ok(()),
    }
}

/// Run a parsed command and return its primary output.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let config = RunConfig::new(cli.band_low_hz, cli.band_high_hz, cli.f_center_hz)?;
    match &cli.command {
        Command::Parse { file } => cmd_parse(file, cli.format.unwrap_or(OutputFormat::Text), cli.stamp),
        Command::Profile(args) => cmd_profile(args, &config, cli.format.unwrap_or(OutputFormat::Csv), cli.stamp),
        Command::Synth(args) => {
            reject_format(cli.format, &[OutputFormat::Json], "synth")?;
            cmd_synth(args, &config, cli.stamp)
        }
        Command::Bandwidth(args) => cmd_bandwidth(
            args,
            &config,
            cli.bits,
            cli.format.unwrap_or(OutputFormat::Json),
            cli.stamp,
        ),
        Command::Pattern(args) => cmd_pattern(
            args,
            &config,
            cli.bits,
            cli.format.unwrap_or(OutputFormat::Csv),
            cli.stamp,
        ),
        Command::Gate(args) => {
            let touchstone_out = cli.out.as_deref().is_some_and(is_touchstone);
            cmd_gate(args, cli.format.unwrap_or(OutputFormat::Csv), touchstone_out, cli.stamp)
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ParseSummary {
    Touchstone {
        n_ports: usize,
        points: usize,
        f_min_hz: f64,
        f_max_hz: f64,
        reference_impedance_ohm: f64,
    },
    StateProfile {
        states: usize,
        frequencies: usize,
        f_min_hz: f64,
        f_max_hz: f64,
    },
    Sweep {
        points: usize,
        f_min_hz: f64,
        f_max_hz: f64,
        step_hz: f64,
    },
}

/// Summary of a Touchstone file, state CSV or sweep CSV.
pub fn cmd_parse(file: &Path, format: OutputFormat, stamp: bool) -> Result<String, CliError> {
    let summary = if is_touchstone(file) {
        let net = read_touchstone(file)?;
        ParseSummary::Touchstone {
            n_ports: net.n_ports(),
            points: net.points().len(),
            f_min_hz: net.f_min(),
            f_max_hz: net.f_max(),
            reference_impedance_ohm: net.reference_impedance(),
        }
    } else {
        let text = read_text(file)?;
        let header = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with('#'))
            .unwrap_or("");
        if header.replace(' ', "") == "freq_hz,re,im" {
            let sweep = Sweep::from_csv(&text)?;
            ParseSummary::Sweep {
                points: sweep.len(),
                f_min_hz: sweep.frequencies()[0],
                f_max_hz: sweep.frequencies()[sweep.len() - 1],
                step_hz: sweep.step(),
            }
        } else {
            let profile = load_state_csv(&text)?;
            let f = profile.frequencies();
            ParseSummary::StateProfile {
                states: profile.states().len(),
                frequencies: f.len(),
                f_min_hz: f[0],
                f_max_hz: f[f.len() - 1],
            }
        }
    };
    match format {
        OutputFormat::Json => to_json(&summary, stamp),
        OutputFormat::Text | OutputFormat::Csv => {
            let line = match summary {
                ParseSummary::Touchstone {
                    n_ports,
                    points,
                    f_min_hz,
                    f_max_hz,
                    reference_impedance_ohm,
                } => format!(
                    "n_ports = {n_ports}, {points} points, {f_min_hz} to {f_max_hz} Hz, z0 = {reference_impedance_ohm} ohm"
                ),
                ParseSummary::StateProfile {
                    states,
                    frequencies,
                    f_min_hz,
                    f_max_hz,
                } => format!("{states} states, {frequencies} frequencies, {f_min_hz} to {f_max_hz} Hz"),
                ParseSummary::Sweep {
                    points,
                    f_min_hz,
                    f_max_hz,
                    step_hz,
                } => format!("sweep, {points} points, {f_min_hz} to {f_max_hz} Hz, step {step_hz} Hz"),
            };
            Ok(format!("{}{line}\n", stamp_line(stamp)))
        }
    }
}

/// Load reflections for a profile source, on `freqs`.
pub fn load_source_profile(
    source: &str,
    switch: Option<&Path>,
    config: &RunConfig,
    freqs: &[f64],
) -> Result<ReflectionProfile, CliError> {
    let switch_model = || -> Result<SwitchModel, CliError> {
        match switch {
            Some(p) => read_switch(p),
            None => Ok(SwitchModel::Ideal),
        }
    };
    match source {
        "ideal-1bit" => Ok(spdt_load_profile(&switch_model()?, freqs)?),
        "ideal-3bit" => {
            let line = MicrostripLine::fr4_lossless(DEFAULT_STUB_WIDTH_MM * 1e-3)?;
            let sw = switch_model()?;
            let design = synthesize_stub_lengths(&sw, &line, &SynthesisOptions::single_frequency(config.f_center))?;
            Ok(sp8t_load_profile(&design, freqs)?)
        }
        other => {
            let path = Path::new(other);
            if is_touchstone(path) {
                if switch.is_some() {
                    return Err(CliError::Usage(
                        "--switch cannot be combined with a switch file as the load source".into(),
                    ));
                }
                return Ok(spdt_load_profile(&read_switch(path)?, freqs)?);
            }
            if extension(path) != "json" {
                return Err(CliError::Usage(format!(
                    "unknown load source `{other}`; expected ideal-1bit, ideal-3bit, a .json design or a .s2p switch"
                )));
            }
            let doc: DesignDocument = serde_json::from_str(&read_text(path)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            if doc.switch != "ideal" && switch.is_none() {
                return Err(CliError::Usage(format!(
                    "design was synthesized against switch `{}`; pass it with --switch",
                    doc.switch
                )));
            }
            let design = doc.into_design(switch_model()?)?;
            Ok(stub_load_profile(&design, freqs)?)
        }
    }
}

#[derive(Debug, Serialize)]
struct ProfileJson {
    states: Vec<usize>,
    frequencies_hz: Vec<f64>,
    /// `[re, im]` per state per frequency.
    gamma: Vec<Vec<[f64; 2]>>,
}

fn profile_json(profile: &ReflectionProfile) -> ProfileJson {
    ProfileJson {
        states: profile.states().to_vec(),
        frequencies_hz: profile.frequencies().to_vec(),
        gamma: (0..profile.states().len())
            .map(|pos| profile.state_gamma(pos).iter().map(|z| [z.re, z.im]).collect())
            .collect(),
    }
}

/// Per-state reflection of a unit cell on the unit cell's own frequency grid.
pub fn cmd_profile(
    args: &ProfileArgs,
    config: &RunConfig,
    format: OutputFormat,
    stamp: bool,
) -> Result<String, CliError> {
    let unit_cell: PortNetwork = read_touchstone(&args.unit_cell)?;
    if unit_cell.n_ports() != 2 {
        return Err(NetworkError::NotTwoPort(unit_cell.n_ports()).into());
    }
    let freqs = unit_cell.frequencies();
    let loads = load_source_profile(&args.loads, args.switch.as_deref(), config, &freqs)?;
    let profile = profile_from_network(&unit_cell, &loads)?;
    match format {
        OutputFormat::Csv => Ok(format!("{}{}", stamp_line(stamp), write_state_csv(&profile))),
        OutputFormat::Json => to_json(&profile_json(&profile), stamp),
        OutputFormat::Text => Ok(format!(
            "{}{} states, {} frequencies\n",
            stamp_line(stamp),
            profile.states().len(),
            profile.frequencies().len()
        )),
    }
}

/// Stub design JSON for an SP8T network.
pub fn cmd_synth(args: &SynthArgs, config: &RunConfig, stamp: bool) -> Result<String, CliError> {
    let line = MicrostripLine::new(
        args.width_mm * 1e-3,
        args.height_mm * 1e-3,
        args.epsilon_r,
        args.loss_db_per_m,
        args.loss_ref_hz,
    )?;
    let (switch, label) = match &args.switch {
        Some(p) => (
            read_switch(p)?,
            p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        ),
        None => (SwitchModel::Ideal, "ideal".to_string()),
    };
    if args.band_points == 0 {
        return Err(CliError::Usage("--band-points must be at least 1".into()));
    }
    let options = if args.band_points == 1 {
        SynthesisOptions {
            band: config.band,
            ..SynthesisOptions::single_frequency(config.f_center)
        }
    } else {
        SynthesisOptions::band(config.f_center, config.band, args.band_points)
    };
    let design = synthesize_stub_lengths(&switch, &line, &options)?;
    to_json(&design.to_document(Some(config.f_center), &label), stamp)
}

/// Bandwidth report of a state CSV.
pub fn cmd_bandwidth(
    args: &BandwidthArgs,
    config: &RunConfig,
    bits: Option<u32>,
    format: OutputFormat,
    stamp: bool,
) -> Result<String, CliError> {
    let mut profile = read_profile(&args.profile)?;
    let bits = if args.virtual_2bit {
        if bits.is_some_and(|b| b != 2) {
            return Err(CliError::Usage("--virtual-2bit implies --bits 2".into()));
        }
        profile = select_states(&profile, &VIRTUAL_2BIT_STATES)?;
        2
    } else {
        bits.unwrap_or_else(|| profile.bits())
    };
    let report = bandwidth(&profile, bits, config.f_center)?;
    match format {
        OutputFormat::Json => to_json(&report, stamp),
        OutputFormat::Csv => Ok(format!("{}{}", stamp_line(stamp), report.to_csv())),
        OutputFormat::Text => {
            let mut out = stamp_line(stamp);
            let _ = writeln!(out, "resolution: {} bit", report.resolution_bits);
            let _ = writeln!(out, "threshold: {} deg", report.threshold_deg);
            let _ = writeln!(out, "sigma at center: {} deg", report.sigma_at_center_deg);
            match report.band {
                Some(b) => {
                    let _ = writeln!(out, "band: {} to {} Hz", b.f_low_hz, b.f_high_hz);
                }
                None => {
                    let _ = writeln!(out, "band: none");
                }
            }
            let _ = writeln!(out, "bandwidth: {} Hz", report.bandwidth_hz);
            Ok(out)
        }
    }
}

#[derive(Debug, Serialize)]
struct PatternSummary {
    tiles_x: usize,
    tiles_y: usize,
    resolution_bits: u32,
    cells: usize,
    area_m2: f64,
    power_mw: f64,
    steer_theta_deg: f64,
    steer_phi_deg: f64,
    freq_hz: f64,
    max_residual_deg: f64,
    peak_theta_deg: f64,
}

#[derive(Debug, Serialize)]
struct PatternJson {
    #[serde(flatten)]
    summary: PatternSummary,
    theta_deg: Vec<f64>,
    phi_deg: Vec<f64>,
    af_db: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct StateMapJson<'a> {
    rows: usize,
    cols: usize,
    states: &'a [usize],
    colors: Vec<&'static str>,
}

/// Codebook and θ cut for a tiled wall.
pub fn cmd_pattern(
    args: &PatternArgs,
    config: &RunConfig,
    bits: Option<u32>,
    format: OutputFormat,
    stamp: bool,
) -> Result<String, CliError> {
    if !(args.theta_step > 0.0 && args.theta_start <= args.theta_stop) {
        return Err(CliError::Usage("θ grid needs step > 0 and start <= stop".into()));
    }
    let profile = read_profile(&args.profile)?;
    let bits = bits.unwrap_or_else(|| profile.bits());
    let layout = build_array(args.tiles_x, args.tiles_y, bits)?;
    let f = args.freq_hz.unwrap_or(config.f_center);
    let gammas: Vec<Complex64> = profile.gammas_interpolated(f).ok_or_else(|| {
        let fr = profile.frequencies();
        CliError::Input(format!(
            "frequency {f} Hz outside profile grid [{}, {}] Hz",
            fr[0],
            fr[fr.len() - 1]
        ))
    })?;
    let (theta, phi) = if args.theta_deg < 0.0 {
        (-args.theta_deg, args.phi_deg + 180.0)
    } else {
        (args.theta_deg, args.phi_deg)
    };
    let codebook = steering_codebook(&layout, &gammas, theta, phi, f)?;
    let cut_phi = args.cut_phi_deg.unwrap_or(args.phi_deg);
    let dirs = theta_cut(args.theta_start, args.theta_stop, args.theta_step, cut_phi);
    let af = array_factor(&layout, &codebook.map, &gammas, f, &dirs, args.element_exponent)?;
    let db = normalized_db(&af);
    let peak = af
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc })
        .0;

    if let Some(path) = &args.state_map {
        let text = if extension(path) == "json" {
            let colors = codebook
                .map
                .states
                .iter()
                .map(|&s| led_color(s, bits).map(|c| c.name()))
                .collect::<Result<Vec<_>, _>>()?;
            to_json(
                &StateMapJson {
                    rows: codebook.map.rows,
                    cols: codebook.map.cols,
                    states: &codebook.map.states,
                    colors,
                },
                stamp,
            )?
        } else {
            codebook.map.to_text()
        };
        std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }

    let summary = PatternSummary {
        tiles_x: args.tiles_x,
        tiles_y: args.tiles_y,
        resolution_bits: bits,
        cells: layout.cell_count(),
        area_m2: layout.area_m2(),
        power_mw: power_consumption_uw(&layout) as f64 / 1e3,
        steer_theta_deg: args.theta_deg,
        steer_phi_deg: args.phi_deg,
        freq_hz: f,
        max_residual_deg: codebook.residual_deg.iter().copied().fold(0.0, f64::max),
        peak_theta_deg: dirs.get(peak).map_or(f64::NAN, |d| d.0),
    };
    match format {
        OutputFormat::Json => to_json(
            &PatternJson {
                summary,
                theta_deg: dirs.iter().map(|d| d.0).collect(),
                phi_deg: dirs.iter().map(|d| d.1).collect(),
                af_db: db,
            },
            stamp,
        ),
        OutputFormat::Csv | OutputFormat::Text => {
            let mut out = stamp_line(stamp);
            let _ = writeln!(out, "# cells={}", summary.cells);
            let _ = writeln!(out, "# area_m2={}", summary.area_m2);
            let _ = writeln!(out, "# power_mw={}", summary.power_mw);
            let _ = writeln!(out, "# max_residual_deg={}", summary.max_residual_deg);
            let _ = writeln!(out, "# peak_theta_deg={}", summary.peak_theta_deg);
            if format == OutputFormat::Csv {
                out.push_str(&pattern_csv(&dirs, &db));
            }
            Ok(out)
        }
    }
}

fn read_sweep(path: &Path) -> Result<Sweep, CliError> {
    if is_touchstone(path) {
        Ok(Sweep::from_network(&read_touchstone(path)?)?)
    } else {
        Ok(Sweep::from_csv(&read_text(path)?)?)
    }
}

#[derive(Debug, Serialize)]
struct SweepJson {
    frequencies_hz: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
    low_confidence: Vec<bool>,
}

fn low_confidence_comment(sweep: &Sweep) -> String {
    let flags = sweep.low_confidence();
    let f = sweep.frequencies();
    let inner: Vec<f64> = f.iter().zip(&flags).filter(|(_, &lc)| !lc).map(|(f, _)| *f).collect();
    match (inner.first(), inner.last()) {
        (Some(lo), Some(hi)) => format!("# low confidence outside [{lo}, {hi}] Hz (outer 10% per edge)\n"),
        _ => "# low confidence: all points\n".to_string(),
    }
}

/// Gated (and optionally plate-normalized) sweep.
pub fn cmd_gate(args: &GateArgs, format: OutputFormat, touchstone_out: bool, stamp: bool) -> Result<String, CliError> {
    if args.normalize && args.reference.is_none() {
        return Err(CliError::Usage("--normalize needs --reference".into()));
    }
    let gate = GateSpec {
        edge_fraction: args.edge_fraction,
        kaiser_beta: args.kaiser_beta,
        ..GateSpec::new(args.gate_start_ns * 1e-9, args.gate_stop_ns * 1e-9)
    };
    let mut out = time_gate(&read_sweep(&args.sweep)?, &gate)?;
    if args.normalize {
        let reference = args.reference.as_deref().map(read_sweep).transpose()?.expect("checked above");
        out = normalize_to_plate(&out, &time_gate(&reference, &gate)?)?;
    } else if let Some(path) = &args.reference {
        // validate the reference even when it is not applied
        let reference = read_sweep(path)?;
        if reference.len() != out.len() {
            return Err(GatingError::GridMismatch.into());
        }
    }

    if touchstone_out {
        let net = out.to_network(50.0)?;
        let mut text = String::from("! time-gated reflection\n");
        text.push_str(&low_confidence_comment(&out).replacen('#', "!", 1));
        if stamp {
            let _ = writeln!(text, "! generated_unix_s={}", unix_time());
        }
        text.push_str(&serialize_touchstone(&net, DataFormat::RI, FrequencyUnit::Hz));
        return Ok(text);
    }
    match format {
        OutputFormat::Json => to_json(
            &SweepJson {
                frequencies_hz: out.frequencies().to_vec(),
                re: out.values().iter().map(|z| z.re).collect(),
                im: out.values().iter().map(|z| z.im).collect(),
                low_confidence: out.low_confidence(),
            },
            stamp,
        ),
        OutputFormat::Csv => Ok(format!("{}{}{}", stamp_line(stamp), low_confidence_comment(&out), out.to_csv())),
        OutputFormat::Text => Ok(format!(
            "{}gated sweep, {} points, {}",
            stamp_line(stamp),
            out.len(),
            low_confidence_comment(&out).trim_start_matches("# ")
        )),
    }
}
