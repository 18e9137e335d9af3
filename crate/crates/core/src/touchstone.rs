//! Touchstone v1 S-parameter files and measured per-state reflection data.
//!
//! Only 1-port and 2-port scattering data are handled. The reference
//! impedance is parsed and carried, but nothing downstream renormalizes:
//! every quantity the toolkit cascades is a reflection coefficient at the
//! same reference.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::angle::{deg_to_rad, rad_to_deg};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TouchstoneError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate option line (first seen on line {first})")]
    DuplicateOptionLine { line: usize, first: usize },
    #[error("missing option line (`# <unit> S <format> R <z0>`)")]
    MissingOptionLine,
    #[error("line {line}: unknown option token `{token}`")]
    UnknownToken { line: usize, token: String },
    #[error("line {line}: Touchstone v2 keyword `{keyword}` is not supported (v1 only)")]
    Version2 { line: usize, keyword: String },
    #[error("line {line}: frequency {freq} Hz is not above the previous point ({prev} Hz)")]
    NonMonotonic { line: usize, freq: f64, prev: f64 },
    #[error("line {line}: expected {expected} values per record, found {found}")]
    ValueCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("unsupported port count {0} (1 and 2 ports only)")]
    UnsupportedPorts(usize),
    #[error("no data points")]
    Empty,
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("line {line}: {message}")]
    Field { line: usize, message: String },
    #[error("missing or wrong header, expected `freq_hz,state,mag_db,phase_deg`")]
    Header,
    #[error("line {line}: duplicate row for state {state} at {freq} Hz")]
    Duplicate { line: usize, state: usize, freq: f64 },
    #[error("incomplete state grid: state {state} has no row at {freq} Hz")]
    Incomplete { state: usize, freq: f64 },
    #[error("state count {0} is not 1, 2, 4 or 8")]
    StateCount(usize),
    #[error("invalid profile: {0}")]
    Invalid(String),
}

/// Frequency multiplier for the option line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FrequencyUnit {
    pub fn scale(self) -> f64 {
        match self {
            FrequencyUnit::Hz => 1.0,
            FrequencyUnit::KHz => 1e3,
            FrequencyUnit::MHz => 1e6,
            FrequencyUnit::GHz => 1e9,
        }
    }

    fn token(self) -> &'static str {
        match self {
            FrequencyUnit::Hz => "HZ",
            FrequencyUnit::KHz => "KHZ",
            FrequencyUnit::MHz => "MHZ",
            FrequencyUnit::GHz => "GHZ",
        }
    }

    fn from_token(token: &str) -> Option<Self> {
        match token.to_ascii_uppercase().as_str() {
            "HZ" => Some(FrequencyUnit::Hz),
            "KHZ" => Some(FrequencyUnit::KHz),
            "MHZ" => Some(FrequencyUnit::MHz),
            "GHZ" => Some(FrequencyUnit::GHz),
            _ => None,
        }
    }
}

/// Number pair encoding of complex values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// Real, imaginary.
    RI,
    /// Linear magnitude, angle in degrees.
    MA,
    /// 20·log10 magnitude, angle in degrees.
    DB,
}

impl DataFormat {
    fn token(self) -> &'static str {
        match self {
            DataFormat::RI => "RI",
            DataFormat::MA => "MA",
            DataFormat::DB => "DB",
        }
    }

    fn from_token(token: &str) -> Option<Self> {
        match token.to_ascii_uppercase().as_str() {
            "RI" => Some(DataFormat::RI),
            "MA" => Some(DataFormat::MA),
            "DB" => Some(DataFormat::DB),
            _ => None,
        }
    }

    fn decode(self, a: f64, b: f64) -> Complex64 {
        match self {
            DataFormat::RI => Complex64::new(a, b),
            DataFormat::MA => Complex64::from_polar(a, deg_to_rad(b)),
            DataFormat::DB => Complex64::from_polar(10f64.powf(a / 20.0), deg_to_rad(b)),
        }
    }

    fn encode(self, z: Complex64) -> (f64, f64) {
        match self {
            DataFormat::RI => (z.re, z.im),
            DataFormat::MA => (z.norm(), rad_to_deg(z.arg())),
            DataFormat::DB => (20.0 * z.norm().log10(), rad_to_deg(z.arg())),
        }
    }
}

/// Square scattering matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl SMatrix {
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self, TouchstoneError> {
        if n == 0 || data.len() != n * n {
            return Err(TouchstoneError::Invalid(format!(
                "matrix of order {n} needs {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn scalar(s11: Complex64) -> Self {
        Self {
            n: 1,
            data: vec![s11],
        }
    }

    pub fn two_port(s11: Complex64, s12: Complex64, s21: Complex64, s22: Complex64) -> Self {
        Self {
            n: 2,
            data: vec![s11, s12, s21, s22],
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Entry S(i+1, j+1), zero-based indices.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkPoint {
    pub frequency: f64,
    pub s: SMatrix,
}

/// An n-port scattering-parameter sweep.
///
/// Frequencies are strictly increasing and every matrix has order
/// `n_ports`; both are checked on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PortNetwork {
    n_ports: usize,
    reference_impedance: f64,
    points: Vec<NetworkPoint>,
}

impl PortNetwork {
    pub fn new(
        n_ports: usize,
        reference_impedance: f64,
        points: Vec<NetworkPoint>,
    ) -> Result<Self, TouchstoneError> {
        if !(1..=2).contains(&n_ports) {
            return Err(TouchstoneError::UnsupportedPorts(n_ports));
        }
        if !(reference_impedance > 0.0 && reference_impedance.is_finite()) {
            return Err(TouchstoneError::Invalid(format!(
                "reference impedance must be positive, got {reference_impedance}"
            )));
        }
        if points.is_empty() {
            return Err(TouchstoneError::Empty);
        }
        for (k, p) in points.iter().enumerate() {
            if p.s.order() != n_ports {
                return Err(TouchstoneError::Invalid(format!(
                    "point {k} has a {0}x{0} matrix in a {n_ports}-port network",
                    p.s.order()
                )));
            }
            if !p.frequency.is_finite() || p.frequency < 0.0 {
                return Err(TouchstoneError::Invalid(format!(
                    "point {k} has frequency {}",
                    p.frequency
                )));
            }
            if k > 0 && p.frequency <= points[k - 1].frequency {
                return Err(TouchstoneError::Invalid(format!(
                    "frequencies not strictly increasing at point {k}"
                )));
            }
        }
        Ok(Self {
            n_ports,
            reference_impedance,
            points,
        })
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn reference_impedance(&self) -> f64 {
        self.reference_impedance
    }

    pub fn points(&self) -> &[NetworkPoint] {
        &self.points
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.frequency).collect()
    }

    pub fn f_min(&self) -> f64 {
        self.points[0].frequency
    }

    pub fn f_max(&self) -> f64 {
        self.points[self.points.len() - 1].frequency
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('!') {
        Some(idx) => &line[..idx],
        None => line,
    }
}

fn parse_real(token: &str, line: usize) -> Result<f64, TouchstoneError> {
    token.parse::<f64>().map_err(|_| TouchstoneError::Syntax {
        line,
        message: format!("`{token}` is not a number"),
    })
}

struct OptionLine {
    unit: FrequencyUnit,
    format: DataFormat,
    z0: f64,
}

fn parse_option_line(body: &str, line: usize) -> Result<OptionLine, TouchstoneError> {
    let mut opts = OptionLine {
        unit: FrequencyUnit::GHz,
        format: DataFormat::MA,
        z0: 50.0,
    };
    let mut tokens = body.split_whitespace();
    while let Some(tok) = tokens.next() {
        if let Some(unit) = FrequencyUnit::from_token(tok) {
            opts.unit = unit;
        } else if let Some(format) = DataFormat::from_token(tok) {
            opts.format = format;
        } else if tok.eq_ignore_ascii_case("S") {
            // scattering parameters are the only supported kind
        } else if tok.eq_ignore_ascii_case("R") {
            let value = tokens.next().ok_or_else(|| TouchstoneError::Syntax {
                line,
                message: "`R` without a reference impedance".into(),
            })?;
            opts.z0 = parse_real(value, line)?;
            if !(opts.z0 > 0.0) {
                return Err(TouchstoneError::Syntax {
                    line,
                    message: format!("reference impedance must be positive, got {value}"),
                });
            }
        } else {
            return Err(TouchstoneError::UnknownToken {
                line,
                token: tok.to_string(),
            });
        }
    }
    Ok(opts)
}

/// Parse Touchstone v1 text, inferring 1 or 2 ports from the first record
/// (3 or 9 values).
pub fn parse_touchstone(text: &str) -> Result<PortNetwork, TouchstoneError> {
    parse_touchstone_inner(text, None)
}

/// Parse Touchstone v1 text with a known port count (e.g. from a `.s2p`
/// extension).
pub fn parse_touchstone_ports(text: &str, n_ports: usize) -> Result<PortNetwork, TouchstoneError> {
    if !(1..=2).contains(&n_ports) {
        return Err(TouchstoneError::UnsupportedPorts(n_ports));
    }
    parse_touchstone_inner(text, Some(n_ports))
}

fn parse_touchstone_inner(
    text: &str,
    mut n_ports: Option<usize>,
) -> Result<PortNetwork, TouchstoneError> {
    let mut options: Option<(OptionLine, usize)> = None;
    let mut points: Vec<NetworkPoint> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        if body.starts_with('[') {
            let keyword = body.split(']').next().unwrap_or(body).to_string() + "]";
            return Err(TouchstoneError::Version2 { line, keyword });
        }
        if let Some(rest) = body.strip_prefix('#') {
            if let Some((_, first)) = options {
                return Err(TouchstoneError::DuplicateOptionLine { line, first });
            }
            options = Some((parse_option_line(rest, line)?, line));
            continue;
        }
        let Some((opts, _)) = options.as_ref() else {
            return Err(TouchstoneError::MissingOptionLine);
        };

        let values = body
            .split_whitespace()
            .map(|t| parse_real(t, line))
            .collect::<Result<Vec<_>, _>>()?;
        let ports = match n_ports {
            Some(n) => n,
            None => {
                let n = match values.len() {
                    3 => 1,
                    9 => 2,
                    found => {
                        return Err(TouchstoneError::ValueCount {
                            line,
                            expected: 9,
                            found,
                        })
                    }
                };
                n_ports = Some(n);
                n
            }
        };
        let expected = 1 + 2 * ports * ports;
        if values.len() != expected {
            return Err(TouchstoneError::ValueCount {
                line,
                expected,
                found: values.len(),
            });
        }

        let frequency = values[0] * opts.unit.scale();
        if let Some(prev) = points.last() {
            if frequency <= prev.frequency {
                return Err(TouchstoneError::NonMonotonic {
                    line,
                    freq: frequency,
                    prev: prev.frequency,
                });
            }
        }
        let decoded: Vec<Complex64> = values[1..]
            .chunks_exact(2)
            .map(|pair| opts.format.decode(pair[0], pair[1]))
            .collect();
        let s = if ports == 1 {
            SMatrix::scalar(decoded[0])
        } else {
            // v1 two-port order on the line: S11 S21 S12 S22
            SMatrix::two_port(decoded[0], decoded[2], decoded[1], decoded[3])
        };
        points.push(NetworkPoint { frequency, s });
    }

    let Some((opts, _)) = options else {
        return Err(TouchstoneError::MissingOptionLine);
    };
    let Some(n) = n_ports else {
        return Err(TouchstoneError::Empty);
    };
    PortNetwork::new(n, opts.z0, points)
}

/// Serialize to Touchstone v1. Numbers are written in shortest round-trip
/// form, so `parse_touchstone(serialize_touchstone(..))` reproduces the
/// network up to the unit and polar conversions.
pub fn serialize_touchstone(net: &PortNetwork, format: DataFormat, unit: FrequencyUnit) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} S {} R {}",
        unit.token(),
        format.token(),
        net.reference_impedance
    );
    for p in &net.points {
        let _ = write!(out, "{}", p.frequency / unit.scale());
        let order: Vec<Complex64> = if net.n_ports == 1 {
            vec![p.s.get(0, 0)]
        } else {
            vec![p.s.get(0, 0), p.s.get(1, 0), p.s.get(0, 1), p.s.get(1, 1)]
        };
        for z in order {
            let (a, b) = format.encode(z);
            let _ = write!(out, " {a} {b}");
        }
        out.push('\n');
    }
    out
}

/// Read a `.s1p`/`.s2p` file; other extensions fall back to inference.
pub fn read_touchstone(path: &Path) -> Result<PortNetwork, TouchstoneError> {
    let text = std::fs::read_to_string(path).map_err(|e| TouchstoneError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("s1p") => parse_touchstone_ports(&text, 1),
        Some("s2p") => parse_touchstone_ports(&text, 2),
        _ => parse_touchstone(&text),
    }
}

/// Per-state complex reflection coefficient over a shared frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionProfile {
    states: Vec<usize>,
    frequencies: Vec<f64>,
    /// `gamma[state_position][freq_index]`
    gamma: Vec<Vec<Complex64>>,
}

impl ReflectionProfile {
    pub fn new(
        states: Vec<usize>,
        frequencies: Vec<f64>,
        gamma: Vec<Vec<Complex64>>,
    ) -> Result<Self, ProfileError> {
        if !matches!(states.len(), 1 | 2 | 4 | 8) {
            return Err(ProfileError::StateCount(states.len()));
        }
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ProfileError::Invalid(
                "state indices must be unique and ascending".into(),
            ));
        }
        if frequencies.is_empty() {
            return Err(ProfileError::Invalid("empty frequency grid".into()));
        }
        if frequencies.iter().any(|f| !f.is_finite())
            || frequencies.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(ProfileError::Invalid(
                "frequencies must be finite and strictly increasing".into(),
            ));
        }
        if gamma.len() != states.len() || gamma.iter().any(|row| row.len() != frequencies.len())
        {
            return Err(ProfileError::Invalid(
                "gamma grid does not match states x frequencies".into(),
            ));
        }
        if gamma.iter().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(ProfileError::Invalid("non-finite reflection coefficient".into()));
        }
        Ok(Self {
            states,
            frequencies,
            gamma,
        })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Reflection coefficients of the state at `position` (not label).
    pub fn state_gamma(&self, position: usize) -> &[Complex64] {
        &self.gamma[position]
    }

    /// All states at one frequency index, in state order.
    pub fn gammas_at(&self, freq_index: usize) -> Vec<Complex64> {
        self.gamma.iter().map(|row| row[freq_index]).collect()
    }

    pub fn position_of(&self, state: usize) -> Option<usize> {
        self.states.iter().position(|&s| s == state)
    }

    /// Number of bits implied by the state count.
    pub fn bits(&self) -> u32 {
        self.states.len().trailing_zeros()
    }

    /// Linear interpolation (real/imaginary) of every state at `f`.
    pub fn gammas_interpolated(&self, f: f64) -> Option<Vec<Complex64>> {
        let freqs = &self.frequencies;
        if f < freqs[0] || f > freqs[freqs.len() - 1] {
            return None;
        }
        let k = freqs.partition_point(|&x| x <= f);
        if k == 0 || freqs[k - 1] == f {
            return Some(self.gammas_at(k.saturating_sub(1)));
        }
        let (f0, f1) = (freqs[k - 1], freqs[k]);
        let t = (f - f0) / (f1 - f0);
        Some(
            self.gamma
                .iter()
                .map(|row| row[k - 1] + (row[k] - row[k - 1]) * t)
                .collect(),
        )
    }
}

pub const STATE_CSV_HEADER: [&str; 4] = ["freq_hz", "state", "mag_db", "phase_deg"];

/// Read a `freq_hz,state,mag_db,phase_deg` CSV into a profile.
pub fn load_state_csv(text: &str) -> Result<ReflectionProfile, ProfileError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(|_| ProfileError::Header)?;
    if header.iter().collect::<Vec<_>>() != STATE_CSV_HEADER {
        return Err(ProfileError::Header);
    }

    let mut cells: BTreeMap<(usize, u64), Complex64> = BTreeMap::new();
    let mut freq_bits: BTreeSet<u64> = BTreeSet::new();
    let mut state_set: BTreeSet<usize> = BTreeSet::new();

    for record in reader.records() {
        let record = record.map_err(|e| ProfileError::Field {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 4 {
            return Err(ProfileError::Field {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let num = |idx: usize| -> Result<f64, ProfileError> {
            record[idx].parse::<f64>().map_err(|_| ProfileError::Field {
                line,
                message: format!("`{}` in column {} is not a number", &record[idx], STATE_CSV_HEADER[idx]),
            })
        };
        let freq = num(0)?;
        let state: usize = record[1].parse().map_err(|_| ProfileError::Field {
            line,
            message: format!("`{}` is not a state index", &record[1]),
        })?;
        let mag_db = num(2)?;
        let phase_deg = num(3)?;
        if !freq.is_finite() || phase_deg.is_nan() || mag_db.is_nan() || mag_db == f64::INFINITY {
            return Err(ProfileError::Field {
                line,
                message: "non-finite value".into(),
            });
        }
        let gamma = Complex64::from_polar(10f64.powf(mag_db / 20.0), deg_to_rad(phase_deg));
        // canonical bits keep -0.0 and 0.0 together
        let key = (freq + 0.0).to_bits();
        if cells.insert((state, key), gamma).is_some() {
            return Err(ProfileError::Duplicate { line, state, freq });
        }
        freq_bits.insert(key);
        state_set.insert(state);
    }

    let mut frequencies: Vec<f64> = freq_bits.iter().map(|&b| f64::from_bits(b)).collect();
    frequencies.sort_by(|a, b| a.total_cmp(b));
    let states: Vec<usize> = state_set.into_iter().collect();
    if states.is_empty() {
        return Err(ProfileError::Invalid("no data rows".into()));
    }
    let mut gamma = Vec::with_capacity(states.len());
    for &state in &states {
        let mut row = Vec::with_capacity(frequencies.len());
        for &freq in &frequencies {
            match cells.get(&(state, freq.to_bits())) {
                Some(&z) => row.push(z),
                None => return Err(ProfileError::Incomplete { state, freq }),
            }
        }
        gamma.push(row);
    }
    ReflectionProfile::new(states, frequencies, gamma)
}

/// Write a profile in the state CSV layout, frequency-major.
pub fn write_state_csv(profile: &ReflectionProfile) -> String {
    let mut out = String::from("freq_hz,state,mag_db,phase_deg\n");
    for (k, f) in profile.frequencies.iter().enumerate() {
        for (pos, state) in profile.states.iter().enumerate() {
            let z = profile.gamma[pos][k];
            let _ = writeln!(
                out,
                "{f},{state},{},{}",
                20.0 * z.norm().log10(),
                rad_to_deg(z.arg())
            );
        }
    }
    out
}
