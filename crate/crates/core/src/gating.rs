//! Measurement post-processing for reflection sweeps: frequency-domain time
//! gating and normalization against a metal reference plate.
//!
//! Gating follows the usual VNA recipe. The sweep is tapered with a Kaiser
//! window, zero-padded 4×, and inverse transformed to a time response. A
//! Tukey gate is applied there before transforming back, and the taper is
//! divided out again. Window compensation is ill-conditioned near the band
//! edges, so the outer 10% on each side are flagged low-confidence.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::touchstone::{NetworkPoint, PortNetwork, SMatrix, TouchstoneError};

pub const MIN_SWEEP_POINTS: usize = 8;
pub const ZERO_PAD_FACTOR: usize = 4;
/// Lower bound applied to the pre-window before dividing it out.
pub const WINDOW_FLOOR: f64 = 1e-3;
/// Fraction of the band at each edge flagged low-confidence after gating.
pub const EDGE_FRACTION_FLAGGED: f64 = 0.10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatingError {
    #[error("sweep has {0} points; at least 8 required")]
    TooFewPoints(usize),
    #[error("frequency grid is not uniform at point {0}")]
    NonUniform(usize),
    #[error("sweep has {freqs} frequencies but {values} values")]
    LengthMismatch { freqs: usize, values: usize },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("gate [{t_start:e}, {t_stop:e}] s lies outside the alias-free span [0, {span:e}) s")]
    OutsideSpan { t_start: f64, t_stop: f64, span: f64 },
    #[error("frequency grids differ")]
    GridMismatch,
    #[error("reference magnitude {magnitude:e} at {freq} Hz is too small")]
    ReferenceUnderflow { freq: f64, magnitude: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Touchstone(#[from] TouchstoneError),
}

/// Complex response on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    frequencies: Vec<f64>,
    values: Vec<Complex64>,
}

impl Sweep {
    pub fn new(frequencies: Vec<f64>, values: Vec<Complex64>) -> Result<Self, GatingError> {
        if frequencies.len() != values.len() {
            return Err(GatingError::LengthMismatch {
                freqs: frequencies.len(),
                values: values.len(),
            });
        }
        if frequencies.len() < MIN_SWEEP_POINTS {
            return Err(GatingError::TooFewPoints(frequencies.len()));
        }
        let step = (frequencies[frequencies.len() - 1] - frequencies[0]) / (frequencies.len() - 1) as f64;
        if !(step > 0.0 && step.is_finite()) {
            return Err(GatingError::NonUniform(1));
        }
        for (k, w) in frequencies.windows(2).enumerate() {
            if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
                return Err(GatingError::NonUniform(k + 1));
            }
        }
        Ok(Self {
            frequencies,
            values,
        })
    }

    /// `n` points from `start` to `stop` inclusive.
    pub fn linear_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.frequencies[self.len() - 1] - self.frequencies[0]) / (self.len() - 1) as f64
    }

    /// Unambiguous time span `1/Δf`.
    pub fn alias_free_span(&self) -> f64 {
        1.0 / self.step()
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self, GatingError> {
        Self::new(self.frequencies.clone(), values)
    }

    fn same_grid(&self, other: &Sweep) -> bool {
        self.len() == other.len()
            && self
                .frequencies
                .iter()
                .zip(&other.frequencies)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()))
    }

    /// Points inside the outer 10% at either band edge.
    pub fn low_confidence(&self) -> Vec<bool> {
        let (f0, f1) = (self.frequencies[0], self.frequencies[self.len() - 1]);
        let margin = EDGE_FRACTION_FLAGGED * (f1 - f0);
        self.frequencies
            .iter()
            .map(|&f| f < f0 + margin || f > f1 - margin)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,re,im\n");
        for (f, z) in self.frequencies.iter().zip(&self.values) {
            let _ = writeln!(out, "{f},{},{}", z.re, z.im);
        }
        out
    }

    /// Parse `freq_hz,re,im` CSV; `#` lines are comments.
    pub fn from_csv(text: &str) -> Result<Self, GatingError> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| GatingError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if header.iter().collect::<Vec<_>>() != ["freq_hz", "re", "im"] {
            return Err(GatingError::Parse {
                line: 1,
                message: "expected header `freq_hz,re,im`".into(),
            });
        }
        let mut freqs = Vec::new();
        let mut values = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| GatingError::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let num = |i: usize| {
                record[i].parse::<f64>().map_err(|_| GatingError::Parse {
                    line,
                    message: format!("`{}` is not a number", &record[i]),
                })
            };
            freqs.push(num(0)?);
            values.push(Complex64::new(num(1)?, num(2)?));
        }
        Self::new(freqs, values)
    }

    pub fn from_network(net: &PortNetwork) -> Result<Self, GatingError> {
        if net.n_ports() != 1 {
            return Err(TouchstoneError::UnsupportedPorts(net.n_ports()).into());
        }
        let (freqs, values) = net.points().iter().map(|p| (p.frequency, p.s.get(0, 0))).unzip();
        Self::new(freqs, values)
    }

    pub fn to_network(&self, reference_impedance: f64) -> Result<PortNetwork, GatingError> {
        let points = self
            .frequencies
            .iter()
            .zip(&self.values)
            .map(|(&frequency, &z)| NetworkPoint {
                frequency,
                s: SMatrix::scalar(z),
            })
            .collect();
        Ok(PortNetwork::new(1, reference_impedance, points)?)
    }
}

/// Time gate with a Tukey shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSpec {
    pub t_start: f64,
    pub t_stop: f64,
    /// Fraction of the gate width given to cosine tapers (0 = rectangular).
    pub edge_fraction: f64,
    /// Kaiser β of the frequency-domain pre-window (0 = rectangular).
    pub kaiser_beta: f64,
}

impl GateSpec {
    pub fn new(t_start: f64, t_stop: f64) -> Self {
        Self {
            t_start,
            t_stop,
            edge_fraction: 0.25,
            kaiser_beta: 6.0,
        }
    }

    fn validate(&self) -> Result<(), GatingError> {
        if !(self.t_start >= 0.0 && self.t_start < self.t_stop && self.t_stop.is_finite()) {
            return Err(GatingError::InvalidGate(format!(
                "need 0 <= t_start < t_stop, got [{}, {}]",
                self.t_start, self.t_stop
            )));
        }
        if !(0.0..=1.0).contains(&self.edge_fraction) {
            return Err(GatingError::InvalidGate(format!(
                "edge fraction {} outside [0, 1]",
                self.edge_fraction
            )));
        }
        if !(self.kaiser_beta >= 0.0 && self.kaiser_beta.is_finite()) {
            return Err(GatingError::InvalidGate(format!(
                "Kaiser beta {} must be >= 0",
                self.kaiser_beta
            )));
        }
        Ok(())
    }

    /// Gate weight at time `t`.
    pub fn weight(&self, t: f64) -> f64 {
        if t < self.t_start || t > self.t_stop {
            return 0.0;
        }
        let taper = 0.5 * self.edge_fraction * (self.t_stop - self.t_start);
        if taper <= 0.0 {
            return 1.0;
        }
        let from_edge = (t - self.t_start).min(self.t_stop - t);
        if from_edge >= taper {
            1.0
        } else {
            0.5 * (1.0 - (PI * from_edge / taper).cos())
        }
    }
}

/// Sum of delayed paths: `Σ a_k·exp(−j2πf·τ_k)`.
pub fn synth_multipath(paths: &[(f64, Complex64)], frequencies: &[f64]) -> Result<Sweep, GatingError> {
    if let Some(&(tau, _)) = paths.iter().find(|(tau, _)| !(*tau >= 0.0)) {
        return Err(GatingError::InvalidGate(format!("path delay {tau} must be >= 0")));
    }
    let values = frequencies
        .iter()
        .map(|&f| {
            paths
                .iter()
                .map(|&(tau, a)| a * Complex64::from_polar(1.0, -2.0 * PI * f * tau))
                .sum()
        })
        .collect();
    Sweep::new(frequencies.to_vec(), values)
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Symmetric Kaiser window of length `n`.
pub fn kaiser_window(n: usize, beta: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let norm = bessel_i0(beta);
    (0..n)
        .map(|k| {
            let r = 2.0 * k as f64 / (n - 1) as f64 - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / norm
        })
        .collect()
}

/// Keep only the part of the time response inside `gate`.
pub fn time_gate(sweep: &Sweep, gate: &GateSpec) -> Result<Sweep, GatingError> {
    gate.validate()?;
    let n = sweep.len();
    if n < MIN_SWEEP_POINTS {
        return Err(GatingError::TooFewPoints(n));
    }
    let span = sweep.alias_free_span();
    if gate.t_start >= span {
        return Err(GatingError::OutsideSpan {
            t_start: gate.t_start,
            t_stop: gate.t_stop,
            span,
        });
    }

    let window = kaiser_window(n, gate.kaiser_beta);
    let m = n * ZERO_PAD_FACTOR;
    let mut buffer = vec![Complex64::new(0.0, 0.0); m];
    for (k, (v, w)) in sweep.values().iter().zip(&window).enumerate() {
        buffer[k] = v * w;
    }

    let mut planner = FftPlanner::<f64>::new();
    // forward sign convention: bin m of the inverse transform is delay m/(M·Δf)
    planner.plan_fft_inverse(m).process(&mut buffer);
    let dt = span / m as f64;
    for (idx, z) in buffer.iter_mut().enumerate() {
        *z *= gate.weight(idx as f64 * dt) / m as f64;
    }
    planner.plan_fft_forward(m).process(&mut buffer);

    let values = buffer[..n]
        .iter()
        .zip(&window)
        .map(|(z, w)| z / w.max(WINDOW_FLOOR))
        .collect();
    sweep.with_values(values)
}

/// Reflection relative to a metal plate measured in the same setup, with
/// the plate taken as Γ = −1.
pub fn normalize_to_plate(dut: &Sweep, reference: &Sweep) -> Result<Sweep, GatingError> {
    if !dut.same_grid(reference) {
        return Err(GatingError::GridMismatch);
    }
    if let Some((f, r)) = reference
        .frequencies()
        .iter()
        .zip(reference.values())
        .find(|(_, r)| !(r.norm() > 1e-9))
    {
        return Err(GatingError::ReferenceUnderflow {
            freq: *f,
            magnitude: r.norm(),
        });
    }
    let values = dut
        .values()
        .iter()
        .zip(reference.values())
        .map(|(d, r)| -(d / r))
        .collect();
    dut.with_values(values)
}

/// Inverse of [`normalize_to_plate`]: the raw response a surface with
/// reflection `gamma` would give against `reference`.
pub fn denormalize_from_plate(gamma: &Sweep, reference: &Sweep) -> Result<Sweep, GatingError> {
    if !gamma.same_grid(reference) {
        return Err(GatingError::GridMismatch);
    }
    let values = gamma
        .values()
        .iter()
        .zip(reference.values())
        .map(|(g, r)| -(g * r))
        .collect();
    gamma.with_values(values)
}
