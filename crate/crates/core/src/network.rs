//! Two-port arithmetic: resampling a sweep and terminating a two-port in a
//! load reflection coefficient.
//!
//! Port 1 is the free-space (Floquet) side of a unit cell and port 2 the
//! microstrip side where the switching network attaches. The same
//! convention is used for a switch path: port 1 is the common terminal and
//! port 2 the throw.

use num_complex::Complex64;
use thiserror::Error;

use crate::touchstone::{PortNetwork, ProfileError, ReflectionProfile, SMatrix};

/// Denominator magnitude at or below which a cascade is reported singular.
pub const SINGULARITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("frequency {freq} Hz outside sweep [{min}, {max}] Hz")]
    OutOfRange { freq: f64, min: f64, max: f64 },
    #[error("singular cascade: |1 - S22*Gamma| = {denominator:e}")]
    Singular { denominator: f64 },
    #[error("expected a 2-port network, got {0} port(s)")]
    NotTwoPort(usize),
    #[error("non-finite two-port entry")]
    NonFinite,
    #[error("state {state} at {freq} Hz: {source}")]
    AtPoint {
        state: usize,
        freq: f64,
        #[source]
        source: Box<NetworkError>,
    },
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Interpolate all S-parameters at `f`, linearly on real and imaginary
/// parts. Grid points are returned exactly; no extrapolation.
pub fn interpolate_at(net: &PortNetwork, f: f64) -> Result<SMatrix, NetworkError> {
    let points = net.points();
    let (min, max) = (net.f_min(), net.f_max());
    if !(f >= min && f <= max) {
        return Err(NetworkError::OutOfRange { freq: f, min, max });
    }
    let k = points.partition_point(|p| p.frequency <= f);
    let lo = &points[k - 1];
    if lo.frequency == f || k == points.len() {
        return Ok(lo.s.clone());
    }
    let hi = &points[k];
    let t = (f - lo.frequency) / (hi.frequency - lo.frequency);
    let data = lo
        .s
        .entries()
        .iter()
        .zip(hi.s.entries())
        .map(|(a, b)| a + (b - a) * t)
        .collect();
    Ok(SMatrix::new(net.n_ports(), data).expect("order preserved"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPortPoint {
    pub frequency: f64,
    pub s11: Complex64,
    pub s12: Complex64,
    pub s21: Complex64,
    pub s22: Complex64,
}

impl TwoPortPoint {
    pub fn new(
        frequency: f64,
        s11: Complex64,
        s12: Complex64,
        s21: Complex64,
        s22: Complex64,
    ) -> Result<Self, NetworkError> {
        let finite = |z: Complex64| z.re.is_finite() && z.im.is_finite();
        if !(frequency.is_finite() && [s11, s12, s21, s22].into_iter().all(finite)) {
            return Err(NetworkError::NonFinite);
        }
        Ok(Self {
            frequency,
            s11,
            s12,
            s21,
            s22,
        })
    }

    /// Lossless matched through connection.
    pub fn thru(frequency: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        Self {
            frequency,
            s11: zero,
            s12: one,
            s21: one,
            s22: zero,
        }
    }

    pub fn from_matrix(frequency: f64, s: &SMatrix) -> Result<Self, NetworkError> {
        if s.order() != 2 {
            return Err(NetworkError::NotTwoPort(s.order()));
        }
        Self::new(frequency, s.get(0, 0), s.get(0, 1), s.get(1, 0), s.get(1, 1))
    }

    /// Interpolated two-port of `net` at `f`.
    pub fn sample(net: &PortNetwork, f: f64) -> Result<Self, NetworkError> {
        if net.n_ports() != 2 {
            return Err(NetworkError::NotTwoPort(net.n_ports()));
        }
        Self::from_matrix(f, &interpolate_at(net, f)?)
    }
}

/// Input reflection at port 1 when port 2 is terminated in `gamma_load`:
/// `S11 + S21·S12·Γ / (1 − S22·Γ)`.
pub fn cascade_reflection(p: &TwoPortPoint, gamma_load: Complex64) -> Result<Complex64, NetworkError> {
    let denominator = Complex64::new(1.0, 0.0) - p.s22 * gamma_load;
    let mag = denominator.norm();
    if !(mag > SINGULARITY_TOLERANCE) {
        return Err(NetworkError::Singular { denominator: mag });
    }
    Ok(p.s11 + p.s21 * p.s12 * gamma_load / denominator)
}

/// Surface reflection per state: every load in `loads` seen through the
/// unit-cell two-port, on the loads' frequency grid.
pub fn profile_from_network(
    unit_cell: &PortNetwork,
    loads: &ReflectionProfile,
) -> Result<ReflectionProfile, NetworkError> {
    if unit_cell.n_ports() != 2 {
        return Err(NetworkError::NotTwoPort(unit_cell.n_ports()));
    }
    let cells = loads
        .frequencies()
        .iter()
        .map(|&f| TwoPortPoint::sample(unit_cell, f))
        .collect::<Vec<_>>();

    let mut gamma = Vec::with_capacity(loads.states().len());
    for (pos, &state) in loads.states().iter().enumerate() {
        let mut row = Vec::with_capacity(loads.frequencies().len());
        for (k, &freq) in loads.frequencies().iter().enumerate() {
            let annotate = |e: NetworkError| NetworkError::AtPoint {
                state,
                freq,
                source: Box::new(e),
            };
            let cell = cells[k].clone().map_err(annotate)?;
            row.push(cascade_reflection(&cell, loads.state_gamma(pos)[k]).map_err(annotate)?);
        }
        gamma.push(row);
    }
    Ok(ReflectionProfile::new(
        loads.states().to_vec(),
        loads.frequencies().to_vec(),
        gamma,
    )?)
}
