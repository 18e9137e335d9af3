//! Phase-resolution metrics.
//!
//! The gaps between adjacent state phases (sorted around the circle,
//! wrap-around included) feed a dispersion measure
//! `σ = sqrt(Σ Δφ³ / (12·360°))`, which equals `Δ/√12` for uniformly spaced
//! states. The effective number of bits is `log2(360° / (√12·σ))`.
//! Usable bandwidth is the contiguous interval around the center frequency
//! on which σ stays at or below the threshold for the resolution.
//!
//! Only phases enter these metrics; magnitudes are reported alongside.

use serde::Serialize;
use thiserror::Error;

use crate::angle::{rad_to_deg, wrap_360};
use crate::touchstone::{ProfileError, ReflectionProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("need at least 2 phases, got {0}")]
    TooFewPhases(usize),
    #[error("non-finite phase")]
    NonFinitePhase,
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("unsupported resolution {0} bit(s); expected 1, 2 or 3")]
    UnsupportedResolution(u32),
    #[error("profile has {found} states but {bits}-bit resolution needs {expected}")]
    StateCountMismatch {
        bits: u32,
        expected: usize,
        found: usize,
    },
    #[error("center frequency {f_center} Hz outside profile grid [{min}, {max}] Hz")]
    CenterOutsideGrid { f_center: f64, min: f64, max: f64 },
    #[error("state {0} not in profile")]
    UnknownState(usize),
    #[error("state {0} selected twice")]
    DuplicateState(usize),
    #[error("{0} states selected; count must be a power of two")]
    NotPowerOfTwo(usize),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Gaps between circularly adjacent phases, in degrees. One gap per phase;
/// they sum to 360°.
pub fn circular_gaps(phases_deg: &[f64]) -> Result<Vec<f64>, MetricsError> {
    if phases_deg.len() < 2 {
        return Err(MetricsError::TooFewPhases(phases_deg.len()));
    }
    if phases_deg.iter().any(|p| !p.is_finite()) {
        return Err(MetricsError::NonFinitePhase);
    }
    let mut sorted: Vec<f64> = phases_deg.iter().map(|&p| wrap_360(p)).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(360.0 - (sorted[sorted.len() - 1] - sorted[0]));
    Ok(gaps)
}

/// Phase standard deviation in degrees from a gap list.
pub fn sigma_phase(gaps_deg: &[f64]) -> f64 {
    let cubes: f64 = gaps_deg.iter().map(|g| g.powi(3)).sum();
    (cubes / (12.0 * 360.0)).sqrt()
}

/// Effective number of bits for a phase standard deviation in degrees.
pub fn effective_bits(sigma_deg: f64) -> Result<f64, MetricsError> {
    if !(sigma_deg > 0.0) {
        return Err(MetricsError::NonPositiveSigma(sigma_deg));
    }
    Ok((360.0 / (12f64.sqrt() * sigma_deg)).log2())
}

/// Largest acceptable σ for a given resolution (0.7 / 1.7 / 2.7 effective
/// bits, rounded as published).
pub fn sigma_threshold(resolution_bits: u32) -> Result<f64, MetricsError> {
    match resolution_bits {
        1 => Ok(65.0),
        2 => Ok(32.5),
        3 => Ok(16.25),
        other => Err(MetricsError::UnsupportedResolution(other)),
    }
}

/// σ of the state phases of `profile` at each grid frequency.
pub fn sigma_per_frequency(profile: &ReflectionProfile) -> Result<Vec<f64>, MetricsError> {
    (0..profile.frequencies().len())
        .map(|k| {
            let phases: Vec<f64> = profile
                .gammas_at(k)
                .iter()
                .map(|g| rad_to_deg(g.arg()))
                .collect();
            Ok(sigma_phase(&circular_gaps(&phases)?))
        })
        .collect()
}

/// Published bandwidth of a comparison design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiteratureEntry {
    pub design: &'static str,
    pub center_frequency_hz: f64,
    pub resolution_bits: u32,
    pub bandwidth_hz: f64,
}

/// Comparison rows quoted for context in bandwidth reports.
pub const LITERATURE: [LiteratureEntry; 4] = [
    LiteratureEntry {
        design: "varactor-loaded patch",
        center_frequency_hz: 3.5e9,
        resolution_bits: 1,
        bandwidth_hz: 255e6,
    },
    LiteratureEntry {
        design: "PIN-diode dipole",
        center_frequency_hz: 3.5e9,
        resolution_bits: 2,
        bandwidth_hz: 109e6,
    },
    LiteratureEntry {
        design: "varactor FSS",
        center_frequency_hz: 3.8e9,
        resolution_bits: 2,
        bandwidth_hz: 190e6,
    },
    LiteratureEntry {
        design: "varactor FSS",
        center_frequency_hz: 4.2e9,
        resolution_bits: 3,
        bandwidth_hz: 85e6,
    },
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub f_low_hz: f64,
    pub f_high_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthReport {
    pub resolution_bits: u32,
    pub states: Vec<usize>,
    pub f_center_hz: f64,
    pub threshold_deg: f64,
    pub sigma_at_center_deg: f64,
    pub frequencies_hz: Vec<f64>,
    pub sigma_deg: Vec<f64>,
    pub n_bit_eff: Vec<f64>,
    /// Weakest state magnitude per frequency, dB.
    pub min_magnitude_db: Vec<f64>,
    pub band: Option<Band>,
    pub bandwidth_hz: f64,
    pub literature: Vec<LiteratureEntry>,
}

impl BandwidthReport {
    /// `freq_hz,sigma_deg,nbit_eff` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,sigma_deg,nbit_eff\n");
        for ((f, s), n) in self
            .frequencies_hz
            .iter()
            .zip(&self.sigma_deg)
            .zip(&self.n_bit_eff)
        {
            out.push_str(&format!("{f},{s},{n}\n"));
        }
        out
    }
}

fn crossing(f_a: f64, s_a: f64, f_b: f64, s_b: f64, threshold: f64) -> f64 {
    f_a + (threshold - s_a) / (s_b - s_a) * (f_b - f_a)
}

/// σ(f), N_bit(f) and the contiguous band around `f_center` where
/// σ ≤ threshold. Band edges are interpolated linearly in σ between grid
/// points. When σ at the center already exceeds the threshold there is no
/// band and the bandwidth is 0.
pub fn bandwidth(
    profile: &ReflectionProfile,
    resolution_bits: u32,
    f_center: f64,
) -> Result<BandwidthReport, MetricsError> {
    let threshold = sigma_threshold(resolution_bits)?;
    let expected = 1usize << resolution_bits;
    if profile.states().len() != expected {
        return Err(MetricsError::StateCountMismatch {
            bits: resolution_bits,
            expected,
            found: profile.states().len(),
        });
    }
    let freqs = profile.frequencies();
    let n = freqs.len();
    let (min, max) = (freqs[0], freqs[n - 1]);
    if !(f_center >= min && f_center <= max) {
        return Err(MetricsError::CenterOutsideGrid { f_center, min, max });
    }

    let sigma = sigma_per_frequency(profile)?;
    let n_bit_eff = sigma
        .iter()
        .map(|&s| effective_bits(s))
        .collect::<Result<Vec<_>, _>>()?;
    let min_magnitude_db = (0..n)
        .map(|k| {
            profile
                .gammas_at(k)
                .iter()
                .map(|g| 20.0 * g.norm().log10())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    // grid neighbours of the center: left ≤ f_center ≤ right
    let right = freqs.partition_point(|&f| f < f_center);
    let left = if freqs[right] == f_center { right } else { right - 1 };
    let sigma_center = if left == right {
        sigma[left]
    } else {
        let t = (f_center - freqs[left]) / (freqs[right] - freqs[left]);
        sigma[left] + t * (sigma[right] - sigma[left])
    };

    let band = if sigma_center > threshold {
        None
    } else {
        let f_low = if sigma[left] > threshold {
            crossing(freqs[left], sigma[left], freqs[right], sigma[right], threshold)
        } else {
            let mut k = left;
            while k > 0 && sigma[k - 1] <= threshold {
                k -= 1;
            }
            if k == 0 {
                freqs[0]
            } else {
                crossing(freqs[k - 1], sigma[k - 1], freqs[k], sigma[k], threshold)
            }
        };
        let f_high = if sigma[right] > threshold {
            crossing(freqs[left], sigma[left], freqs[right], sigma[right], threshold)
        } else {
            let mut k = right;
            while k + 1 < n && sigma[k + 1] <= threshold {
                k += 1;
            }
            if k + 1 == n {
                freqs[n - 1]
            } else {
                crossing(freqs[k], sigma[k], freqs[k + 1], sigma[k + 1], threshold)
            }
        };
        Some(Band {
            f_low_hz: f_low,
            f_high_hz: f_high,
        })
    };

    Ok(BandwidthReport {
        resolution_bits,
        states: profile.states().to_vec(),
        f_center_hz: f_center,
        threshold_deg: threshold,
        sigma_at_center_deg: sigma_center,
        frequencies_hz: freqs.to_vec(),
        sigma_deg: sigma,
        n_bit_eff,
        min_magnitude_db,
        bandwidth_hz: band.map_or(0.0, |b| b.f_high_hz - b.f_low_hz),
        band,
        literature: LITERATURE
            .iter()
            .filter(|e| e.resolution_bits == resolution_bits)
            .copied()
            .collect(),
    })
}

/// Sub-profile restricted to `indices` (state labels), e.g. `[0, 2, 4, 6]`
/// for the 2-bit subset of a 3-bit surface.
pub fn select_states(
    profile: &ReflectionProfile,
    indices: &[usize],
) -> Result<ReflectionProfile, MetricsError> {
    if !indices.len().is_power_of_two() {
        return Err(MetricsError::NotPowerOfTwo(indices.len()));
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(MetricsError::DuplicateState(w[0]));
    }
    let gamma = sorted
        .iter()
        .map(|&s| {
            profile
                .position_of(s)
                .map(|pos| profile.state_gamma(pos).to_vec())
                .ok_or(MetricsError::UnknownState(s))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ReflectionProfile::new(
        sorted,
        profile.frequencies().to_vec(),
        gamma,
    )?)
}
