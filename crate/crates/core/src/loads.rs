//! Switchable reflective terminations.
//!
//! A 1-bit cell uses an SPDT switch with one throw left open and the other
//! grounded. A 3-bit cell uses an SP8T switch whose throws end in open or
//! shorted microstrip stubs; stub lengths are synthesized so the eight
//! load phases land on `i·45°`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::{circular_distance, rad_to_deg, wrap_180, wrap_360};
use crate::network::{cascade_reflection, NetworkError, TwoPortPoint};
use crate::optimize::{golden_section, SearchError};
use crate::touchstone::{PortNetwork, ProfileError, ReflectionProfile};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative permittivity of the FR4 substrate used for the switching
/// circuitry.
pub const FR4_EPSILON_R: f64 = 4.9;
/// FR4 substrate thickness, m.
pub const FR4_THICKNESS: f64 = 0.8e-3;

/// Golden-section iteration budget per stub.
pub const MAX_SEARCH_ITERATIONS: usize = 200;
const COARSE_SAMPLES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadError {
    #[error("invalid microstrip line: {0}")]
    InvalidLine(String),
    #[error("invalid stub design: {0}")]
    InvalidDesign(String),
    #[error("invalid synthesis request: {0}")]
    InvalidRequest(String),
    #[error("state {state}: {source}")]
    Search {
        state: usize,
        #[source]
        source: SearchError,
    },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Quasi-static microstrip line with a scalar loss figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicrostripLine {
    pub width_m: f64,
    pub substrate_height_m: f64,
    pub epsilon_r: f64,
    /// Attenuation in dB/m at `reference_frequency_hz`, scaled by √f.
    pub loss_db_per_m: f64,
    pub reference_frequency_hz: f64,
}

impl MicrostripLine {
    pub fn new(
        width_m: f64,
        substrate_height_m: f64,
        epsilon_r: f64,
        loss_db_per_m: f64,
        reference_frequency_hz: f64,
    ) -> Result<Self, LoadError> {
        let line = Self {
            width_m,
            substrate_height_m,
            epsilon_r,
            loss_db_per_m,
            reference_frequency_hz,
        };
        line.validate()?;
        Ok(line)
    }

    /// Lossless line on the FR4 stack-up.
    pub fn fr4_lossless(width_m: f64) -> Result<Self, LoadError> {
        Self::new(width_m, FR4_THICKNESS, FR4_EPSILON_R, 0.0, 1e9)
    }

    pub fn validate(&self) -> Result<(), LoadError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.width_m) || !ok(self.substrate_height_m) {
            return Err(LoadError::InvalidLine("width and height must be positive".into()));
        }
        if !(self.epsilon_r.is_finite() && self.epsilon_r >= 1.0) {
            return Err(LoadError::InvalidLine(format!(
                "epsilon_r must be >= 1, got {}",
                self.epsilon_r
            )));
        }
        if !(self.loss_db_per_m.is_finite() && self.loss_db_per_m >= 0.0) {
            return Err(LoadError::InvalidLine("loss must be >= 0".into()));
        }
        if !ok(self.reference_frequency_hz) {
            return Err(LoadError::InvalidLine(
                "loss reference frequency must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Attenuation in dB/m at `f`.
    pub fn attenuation_db_per_m(&self, f: f64) -> f64 {
        self.loss_db_per_m * (f / self.reference_frequency_hz).sqrt()
    }

    /// Guided wavelength at `f`.
    pub fn guided_wavelength(&self, f: f64) -> f64 {
        SPEED_OF_LIGHT / (f * microstrip_eeff(self).sqrt())
    }

    /// Phase constant β at `f`, rad/m.
    pub fn phase_constant(&self, f: f64) -> f64 {
        2.0 * PI * f * microstrip_eeff(self).sqrt() / SPEED_OF_LIGHT
    }
}

/// Hammerstad–Jensen quasi-static effective permittivity.
pub fn microstrip_eeff(line: &MicrostripLine) -> f64 {
    let er = line.epsilon_r;
    let u = line.width_m / line.substrate_height_m;
    let u4 = u.powi(4);
    let a = 1.0
        + ((u4 + (u / 52.0).powi(2)) / (u4 + 0.432)).ln() / 49.0
        + (1.0 + (u / 18.1).powi(3)).ln() / 18.7;
    let b = 0.564 * ((er - 0.9) / (er + 3.0)).powf(0.053);
    (er + 1.0) / 2.0 + (er - 1.0) / 2.0 * (1.0 + 10.0 / u).powf(-a * b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    Open,
    Short,
}

impl Termination {
    /// Reflection coefficient at the stub end.
    pub fn gamma(self) -> f64 {
        match self {
            Termination::Open => 1.0,
            Termination::Short => -1.0,
        }
    }
}

/// Reflection seen at the input of a terminated stub of length `length`.
pub fn stub_reflection(length: f64, termination: Termination, f: f64, line: &MicrostripLine) -> Complex64 {
    let beta = line.phase_constant(f);
    let round_trip_db = 2.0 * line.attenuation_db_per_m(f) * length;
    let mag = 10f64.powf(-round_trip_db / 20.0);
    Complex64::from_polar(mag, -2.0 * beta * length) * termination.gamma()
}

/// Per-throw switch path: port 1 common, port 2 throw.
#[derive(Debug, Clone, PartialEq)]
pub enum SwitchModel {
    Ideal,
    Network(PortNetwork),
}

impl SwitchModel {
    pub fn from_network(net: PortNetwork) -> Result<Self, LoadError> {
        if net.n_ports() != 2 {
            return Err(NetworkError::NotTwoPort(net.n_ports()).into());
        }
        Ok(SwitchModel::Network(net))
    }

    pub fn path(&self, f: f64) -> Result<TwoPortPoint, NetworkError> {
        match self {
            SwitchModel::Ideal => Ok(TwoPortPoint::thru(f)),
            SwitchModel::Network(net) => TwoPortPoint::sample(net, f),
        }
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self, SwitchModel::Ideal)
    }

    fn range(&self) -> Option<(f64, f64)> {
        match self {
            SwitchModel::Ideal => None,
            SwitchModel::Network(net) => Some((net.f_min(), net.f_max())),
        }
    }
}

/// Two-state load of an SPDT with one throw open and one grounded.
pub fn spdt_load_profile(switch: &SwitchModel, frequencies: &[f64]) -> Result<ReflectionProfile, LoadError> {
    let mut gamma: Vec<Vec<Complex64>> = (0..2).map(|_| Vec::with_capacity(frequencies.len())).collect();
    for &f in frequencies {
        let path = switch.path(f)?;
        for (row, term) in gamma.iter_mut().zip([Termination::Open, Termination::Short]) {
            row.push(cascade_reflection(&path, Complex64::new(term.gamma(), 0.0))?);
        }
    }
    Ok(ReflectionProfile::new(vec![0, 1], frequencies.to_vec(), gamma)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stub {
    pub state: usize,
    pub termination: Termination,
    pub length_m: f64,
    /// Phase error at the design frequency, degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_deg: Option<f64>,
}

/// Line lengths and terminations behind each switch throw.
#[derive(Debug, Clone, PartialEq)]
pub struct StubNetworkDesign {
    stubs: Vec<Stub>,
    line: MicrostripLine,
    switch: SwitchModel,
}

impl StubNetworkDesign {
    pub fn new(stubs: Vec<Stub>, line: MicrostripLine, switch: SwitchModel) -> Result<Self, LoadError> {
        line.validate()?;
        if !matches!(stubs.len(), 2 | 4 | 8) {
            return Err(LoadError::InvalidDesign(format!(
                "{} stubs; expected 2, 4 or 8",
                stubs.len()
            )));
        }
        for (i, stub) in stubs.iter().enumerate() {
            if stub.state != i {
                return Err(LoadError::InvalidDesign(format!(
                    "stub {i} is labeled state {}",
                    stub.state
                )));
            }
            if !(stub.length_m.is_finite() && stub.length_m >= 0.0) {
                return Err(LoadError::InvalidDesign(format!(
                    "state {i} has length {}",
                    stub.length_m
                )));
            }
        }
        if stubs.len() == 8 {
            let open = stubs
                .iter()
                .filter(|s| s.termination == Termination::Open)
                .count();
            if open != 4 {
                return Err(LoadError::InvalidDesign(format!(
                    "8-state design needs 4 open and 4 short stubs, has {open} open"
                )));
            }
        }
        Ok(Self {
            stubs,
            line,
            switch,
        })
    }

    pub fn stubs(&self) -> &[Stub] {
        &self.stubs
    }

    pub fn line(&self) -> &MicrostripLine {
        &self.line
    }

    pub fn switch(&self) -> &SwitchModel {
        &self.switch
    }

    pub fn to_document(&self, f_center_hz: Option<f64>, switch_label: &str) -> DesignDocument {
        DesignDocument {
            f_center_hz,
            switch: switch_label.to_string(),
            line: self.line,
            stubs: self.stubs.clone(),
        }
    }
}

/// JSON form of a stub design. The switch is recorded as a label (`ideal`
/// or the source file name); measured switch data has to be supplied again
/// when the document is loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_center_hz: Option<f64>,
    pub switch: String,
    pub line: MicrostripLine,
    pub stubs: Vec<Stub>,
}

impl DesignDocument {
    pub fn into_design(self, switch: SwitchModel) -> Result<StubNetworkDesign, LoadError> {
        StubNetworkDesign::new(self.stubs, self.line, switch)
    }
}

/// Load reflection of every stub state, seen through the switch path.
pub fn stub_load_profile(
    design: &StubNetworkDesign,
    frequencies: &[f64],
) -> Result<ReflectionProfile, LoadError> {
    let mut gamma: Vec<Vec<Complex64>> = design.stubs.iter().map(|_| Vec::with_capacity(frequencies.len())).collect();
    for &f in frequencies {
        let path = design.switch.path(f)?;
        for (row, stub) in gamma.iter_mut().zip(&design.stubs) {
            let load = stub_reflection(stub.length_m, stub.termination, f, &design.line);
            row.push(cascade_reflection(&path, load)?);
        }
    }
    let states = (0..design.stubs.len()).collect();
    Ok(ReflectionProfile::new(states, frequencies.to_vec(), gamma)?)
}

/// Eight-state load profile of an SP8T stub network.
pub fn sp8t_load_profile(
    design: &StubNetworkDesign,
    frequencies: &[f64],
) -> Result<ReflectionProfile, LoadError> {
    if design.stubs.len() != 8 {
        return Err(LoadError::InvalidDesign(format!(
            "SP8T design needs 8 stubs, has {}",
            design.stubs.len()
        )));
    }
    stub_load_profile(design, frequencies)
}

/// Termination giving the shorter lossless stub for `target_deg`, with its
/// electrical length βl in degrees.
pub fn shortest_termination(target_deg: f64) -> (Termination, f64) {
    // open: -2βl ≡ target; short: 180 - 2βl ≡ target
    let open = wrap_360(-target_deg) / 2.0;
    let short = wrap_360(180.0 - target_deg) / 2.0;
    if short < open {
        (Termination::Short, short)
    } else {
        (Termination::Open, open)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub f_center: f64,
    pub band: (f64, f64),
    /// Frequencies sampled uniformly across `band` (one when the band is a
    /// single point).
    pub band_points: usize,
    /// Per-frequency weights, uniform when `None`.
    pub weights: Option<Vec<f64>>,
    /// Number of target states, spaced 360°/n apart.
    pub states: usize,
}

impl SynthesisOptions {
    pub fn single_frequency(f_center: f64) -> Self {
        Self {
            f_center,
            band: (f_center, f_center),
            band_points: 1,
            weights: None,
            states: 8,
        }
    }

    pub fn band(f_center: f64, band: (f64, f64), band_points: usize) -> Self {
        Self {
            f_center,
            band,
            band_points,
            weights: None,
            states: 8,
        }
    }

    fn frequencies(&self) -> Vec<f64> {
        let (lo, hi) = self.band;
        if lo == hi || self.band_points <= 1 {
            return vec![self.f_center];
        }
        let n = self.band_points;
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Choose stub terminations and lengths so state `i` reflects with phase
/// `i·360°/n`.
///
/// Terminations come from the lossless closed form (shortest line). Each
/// length is then refined independently by golden-section search on the
/// weighted mean-square circular phase error over the band, within
/// `[0, λg/2)` at the center frequency.
pub fn synthesize_stub_lengths(
    switch: &SwitchModel,
    line: &MicrostripLine,
    options: &SynthesisOptions,
) -> Result<StubNetworkDesign, LoadError> {
    line.validate()?;
    let (lo, hi) = options.band;
    let fc = options.f_center;
    if !(fc > 0.0 && lo <= fc && fc <= hi) {
        return Err(LoadError::InvalidRequest(format!(
            "center {fc} Hz outside band [{lo}, {hi}] Hz"
        )));
    }
    if let Some((smin, smax)) = switch.range() {
        if lo < smin || hi > smax {
            return Err(LoadError::InvalidRequest(format!(
                "band [{lo}, {hi}] Hz exceeds switch sweep [{smin}, {smax}] Hz"
            )));
        }
    }
    if !matches!(options.states, 2 | 4 | 8) {
        return Err(LoadError::InvalidRequest(format!(
            "{} states; expected 2, 4 or 8",
            options.states
        )));
    }
    let freqs = options.frequencies();
    let weights = match &options.weights {
        Some(w) if w.len() != freqs.len() => {
            return Err(LoadError::InvalidRequest(format!(
                "{} weights for {} band frequencies",
                w.len(),
                freqs.len()
            )))
        }
        Some(w) if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 => {
            return Err(LoadError::InvalidRequest("weights must be non-negative with a positive sum".into()))
        }
        Some(w) => w.clone(),
        None => vec![1.0; freqs.len()],
    };
    let weight_sum: f64 = weights.iter().sum();
    let paths = freqs
        .iter()
        .map(|&f| switch.path(f))
        .collect::<Result<Vec<_>, _>>()?;
    let center_path = switch.path(fc)?;

    let half_wave = line.guided_wavelength(fc) / 2.0;
    let step = 360.0 / options.states as f64;
    let mut stubs = Vec::with_capacity(options.states);

    for state in 0..options.states {
        let target = state as f64 * step;
        let (termination, _) = shortest_termination(target);

        let objective = |length: f64| -> f64 {
            let mut acc = 0.0;
            for ((&f, path), &w) in freqs.iter().zip(&paths).zip(&weights) {
                let load = stub_reflection(length, termination, f, line);
                match cascade_reflection(path, load) {
                    Ok(g) => acc += w * wrap_180(rad_to_deg(g.arg()) - target).powi(2),
                    Err(_) => return f64::NAN,
                }
            }
            acc / weight_sum
        };

        // coarse scan so the golden-section bracket holds a single minimum
        let dl = half_wave / COARSE_SAMPLES as f64;
        let mut best = (0usize, f64::INFINITY);
        for j in 0..COARSE_SAMPLES {
            let v = objective(j as f64 * dl);
            if v.is_nan() {
                return Err(LoadError::Search {
                    state,
                    source: SearchError::NonFinite { x: j as f64 * dl },
                });
            }
            if v < best.1 {
                best = (j, v);
            }
        }
        let a = best.0.saturating_sub(1) as f64 * dl;
        let b = ((best.0 + 1) as f64 * dl).min(half_wave);
        let (x, fx) = golden_section(objective, a, b, 1e-12 * half_wave, MAX_SEARCH_ITERATIONS)
            .map_err(|source| LoadError::Search { state, source })?;

        let mut length = x;
        let mut value = fx;
        for edge in [a, b] {
            let v = objective(edge);
            if v < value && edge < half_wave {
                length = edge;
                value = v;
            }
        }

        let center_gamma = cascade_reflection(
            &center_path,
            stub_reflection(length, termination, fc, line),
        )?;
        let residual = circular_distance(rad_to_deg(center_gamma.arg()), target);
        stubs.push(Stub {
            state,
            termination,
            length_m: length,
            residual_deg: Some(residual),
        });
    }
    StubNetworkDesign::new(stubs, *line, switch.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::touchstone::{NetworkPoint, SMatrix};
    use approx::assert_abs_diff_eq;

    fn line_15mm() -> MicrostripLine {
        MicrostripLine::fr4_lossless(1.5e-3).unwrap()
    }

    #[test]
    fn air_line_has_unit_eeff() {
        let line = MicrostripLine::new(1e-3, 1e-3, 1.0, 0.0, 1e9).unwrap();
        assert_abs_diff_eq!(microstrip_eeff(&line), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn fr4_eeff_is_bounded() {
        let e = microstrip_eeff(&line_15mm());
        assert!(e > 1.0 && e < 4.9);
        // closed-form evaluation for w/h = 1.875
        assert_abs_diff_eq!(e, 3.664_842_433, epsilon = 1e-8);
    }

    #[test]
    fn wide_line_approaches_substrate_permittivity() {
        let line = MicrostripLine::new(1e3, 1e-3, 4.9, 0.0, 1e9).unwrap();
        let e = microstrip_eeff(&line);
        assert!((e - 4.9).abs() / 4.9 < 0.02, "{e}");
    }

    #[test]
    fn invalid_lines_rejected() {
        assert!(MicrostripLine::new(0.0, 1e-3, 4.9, 0.0, 1e9).is_err());
        assert!(MicrostripLine::new(1e-3, 1e-3, 0.5, 0.0, 1e9).is_err());
        assert!(MicrostripLine::new(1e-3, 1e-3, 4.9, -1.0, 1e9).is_err());
    }

    #[test]
    fn zero_length_stubs() {
        let line = line_15mm();
        assert_eq!(stub_reflection(0.0, Termination::Open, 3.6e9, &line), Complex64::new(1.0, 0.0));
        let s = stub_reflection(0.0, Termination::Short, 3.6e9, &line);
        assert_eq!(s.re, -1.0);
        assert_abs_diff_eq!(rad_to_deg(s.arg()).abs(), 180.0, epsilon = 1e-12);
    }

    #[test]
    fn eighth_wave_short_is_plus_ninety() {
        let line = line_15mm();
        let l = line.guided_wavelength(3.6e9) / 8.0;
        let g = stub_reflection(l, Termination::Short, 3.6e9, &line);
        // -exp(-j·π/2) = +j
        assert_abs_diff_eq!(rad_to_deg(g.arg()), 90.0, epsilon = 1e-9);
        assert_abs_diff_eq!(g.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn lossy_stub_round_trip_attenuation() {
        let line = MicrostripLine::new(1.5e-3, 0.8e-3, 4.9, 10.0, 1e9).unwrap();
        let g = stub_reflection(0.01, Termination::Open, 4e9, &line);
        // 10 dB/m · sqrt(4) = 20 dB/m, round trip over 2 cm = 0.4 dB
        assert_abs_diff_eq!(g.norm(), 10f64.powf(-0.4 / 20.0), epsilon = 1e-14);
    }

    #[test]
    fn ideal_spdt_is_plus_minus_one() {
        let p = spdt_load_profile(&SwitchModel::Ideal, &[3.3e9, 3.8e9]).unwrap();
        for k in 0..2 {
            assert_eq!(p.state_gamma(0)[k], Complex64::new(1.0, 0.0));
            assert_eq!(p.state_gamma(1)[k], Complex64::new(-1.0, 0.0));
        }
    }

    fn flat_switch(s11: Complex64, s21: Complex64, s22: Complex64) -> SwitchModel {
        let points = [3.0e9, 4.0e9]
            .iter()
            .map(|&frequency| NetworkPoint {
                frequency,
                s: SMatrix::two_port(s11, s21, s21, s22),
            })
            .collect();
        SwitchModel::from_network(PortNetwork::new(2, 50.0, points).unwrap()).unwrap()
    }

    #[test]
    fn lossy_thru_switch_doubles_insertion_loss() {
        let t = 10f64.powf(-1.0 / 20.0);
        let sw = flat_switch(Complex64::new(0.0, 0.0), Complex64::new(t, 0.0), Complex64::new(0.0, 0.0));
        let p = spdt_load_profile(&sw, &[3.6e9]).unwrap();
        for pos in 0..2 {
            assert_abs_diff_eq!(p.state_gamma(pos)[0].norm(), 10f64.powf(-2.0 / 20.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn mismatched_switch_matches_scalar_oracle() {
        let sw = flat_switch(Complex64::new(0.1, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let p = spdt_load_profile(&sw, &[3.6e9]).unwrap();
        // s22 = 0: Γ = 0.1 ± 1
        assert_abs_diff_eq!(p.state_gamma(0)[0].re, 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(p.state_gamma(1)[0].re, -0.9, epsilon = 1e-15);
    }

    #[test]
    fn switch_sweep_range_enforced() {
        let sw = flat_switch(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        assert!(matches!(
            spdt_load_profile(&sw, &[4.5e9]),
            Err(LoadError::Network(NetworkError::OutOfRange { .. }))
        ));
    }

    #[test]
    fn termination_choice_matches_shortest_line() {
        let expected = [
            (Termination::Open, 0.0),
            (Termination::Short, 67.5),
            (Termination::Short, 45.0),
            (Termination::Short, 22.5),
            (Termination::Short, 0.0),
            (Termination::Open, 67.5),
            (Termination::Open, 45.0),
            (Termination::Open, 22.5),
        ];
        for (i, exp) in expected.iter().enumerate() {
            assert_eq!(shortest_termination(i as f64 * 45.0), *exp, "state {i}");
        }
    }

    #[test]
    fn single_frequency_synthesis_hits_targets() {
        let line = line_15mm();
        let design =
            synthesize_stub_lengths(&SwitchModel::Ideal, &line, &SynthesisOptions::single_frequency(3.6e9))
                .unwrap();
        let lambda_g = line.guided_wavelength(3.6e9);
        let stubs = design.stubs();
        assert_eq!(stubs[0].termination, Termination::Open);
        assert_eq!(stubs[0].length_m, 0.0);
        assert_eq!(stubs[4].termination, Termination::Short);
        assert_eq!(stubs[4].length_m, 0.0);
        assert!(((stubs[2].length_m - lambda_g / 8.0) / (lambda_g / 8.0)).abs() < 1e-6);
        assert!(((stubs[7].length_m - lambda_g / 16.0) / (lambda_g / 16.0)).abs() < 1e-6);
        let profile = sp8t_load_profile(&design, &[3.6e9]).unwrap();
        for (i, stub) in stubs.iter().enumerate() {
            assert!(stub.residual_deg.unwrap() < 1e-6);
            let phase = wrap_360(rad_to_deg(profile.state_gamma(i)[0].arg()));
            assert!(circular_distance(phase, i as f64 * 45.0) < 1e-6, "state {i}: {phase}");
        }
    }

    #[test]
    fn band_synthesis_keeps_center_residual_small() {
        let line = line_15mm();
        let opts = SynthesisOptions::band(3.6e9, (3.4e9, 3.8e9), 11);
        let design = synthesize_stub_lengths(&SwitchModel::Ideal, &line, &opts).unwrap();
        for stub in design.stubs() {
            assert!(stub.residual_deg.unwrap() <= 1.0, "{stub:?}");
        }
        // phase error is proportional to f·l, so uniform weights null it at Σf²/Σf
        let opts = SynthesisOptions::band(3.6e9, (3.3e9, 3.8e9), 11);
        let design = synthesize_stub_lengths(&SwitchModel::Ideal, &line, &opts).unwrap();
        let freqs: Vec<f64> = (0..11).map(|k| 3.3e9 + 0.05e9 * k as f64).collect();
        let f_null = freqs.iter().map(|f| f * f).sum::<f64>() / freqs.iter().sum::<f64>();
        let p = sp8t_load_profile(&design, &[f_null]).unwrap();
        for i in 0..8 {
            let phase = rad_to_deg(p.state_gamma(i)[0].arg());
            assert!(circular_distance(phase, i as f64 * 45.0) < 1e-3, "state {i}");
        }
    }

    #[test]
    fn degenerate_zero_length_design_has_two_phases() {
        let stubs = (0..8)
            .map(|state| Stub {
                state,
                termination: if state % 2 == 0 { Termination::Open } else { Termination::Short },
                length_m: 0.0,
                residual_deg: None,
            })
            .collect();
        let design = StubNetworkDesign::new(stubs, line_15mm(), SwitchModel::Ideal).unwrap();
        let p = sp8t_load_profile(&design, &[3.6e9]).unwrap();
        let mut phases: Vec<i64> = (0..8)
            .map(|i| wrap_360(rad_to_deg(p.state_gamma(i)[0].arg())).round() as i64)
            .collect();
        phases.sort();
        phases.dedup();
        assert_eq!(phases, vec![0, 180]);
    }

    #[test]
    fn lossy_magnitude_decreases_with_length() {
        let line = MicrostripLine::new(1.5e-3, 0.8e-3, 4.9, 20.0, 3.6e9).unwrap();
        let stubs = (0..8)
            .map(|state| Stub {
                state,
                termination: if state < 4 { Termination::Open } else { Termination::Short },
                length_m: state as f64 * 2e-3,
                residual_deg: None,
            })
            .collect();
        let design = StubNetworkDesign::new(stubs, line, SwitchModel::Ideal).unwrap();
        let p = sp8t_load_profile(&design, &[3.6e9]).unwrap();
        let mags: Vec<f64> = (0..8).map(|i| p.state_gamma(i)[0].norm()).collect();
        assert!(mags.windows(2).all(|w| w[1] < w[0]), "{mags:?}");
        assert!(mags.iter().all(|&m| m <= 1.0));
    }

    #[test]
    fn design_invariants() {
        let stub = |state, termination| Stub {
            state,
            termination,
            length_m: 0.0,
            residual_deg: None,
        };
        let all_open = (0..8).map(|s| stub(s, Termination::Open)).collect();
        assert!(StubNetworkDesign::new(all_open, line_15mm(), SwitchModel::Ideal).is_err());
        let negative = vec![
            stub(0, Termination::Open),
            Stub {
                length_m: -1e-3,
                ..stub(1, Termination::Short)
            },
        ];
        assert!(StubNetworkDesign::new(negative, line_15mm(), SwitchModel::Ideal).is_err());
    }

    #[test]
    fn synthesis_rejects_band_outside_switch() {
        let sw = flat_switch(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let opts = SynthesisOptions::band(3.6e9, (2.5e9, 3.8e9), 5);
        assert!(matches!(
            synthesize_stub_lengths(&sw, &line_15mm(), &opts),
            Err(LoadError::InvalidRequest(_))
        ));
        let opts = SynthesisOptions::band(3.9e9, (3.3e9, 3.8e9), 5);
        assert!(synthesize_stub_lengths(&SwitchModel::Ideal, &line_15mm(), &opts).is_err());
    }

    #[test]
    fn design_document_json_round_trip() {
        let design = synthesize_stub_lengths(
            &SwitchModel::Ideal,
            &line_15mm(),
            &SynthesisOptions::single_frequency(3.6e9),
        )
        .unwrap();
        let doc = design.to_document(Some(3.6e9), "ideal");
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains("\"termination\":\"short\""));
        assert!(json.contains("\"residual_deg\""));
        let back: DesignDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_design(SwitchModel::Ideal).unwrap(), design);
    }
}
