//! Tiled surface geometry, steering codebooks and far-field patterns.
//!
//! A tile is 4×4 unit cells of 60 mm × 45 mm; tiles concatenate into
//! walls. Cell coordinates are centered on the surface, with x along the
//! 60 mm pitch and y along the 45 mm pitch.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::{circular_distance, rad_to_deg, wrap_360};
use crate::loads::SPEED_OF_LIGHT;

pub const CELLS_PER_TILE_SIDE: usize = 4;
pub const PITCH_X_M: f64 = 0.060;
pub const PITCH_Y_M: f64 = 0.045;

/// Switching-circuit power per tile, microwatts (controller and LEDs
/// excluded).
pub const TILE_POWER_1BIT_UW: u64 = 200;
pub const TILE_POWER_3BIT_UW: u64 = 2_200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrayError {
    #[error("tile counts must be at least 1, got {0}x{1}")]
    NoTiles(usize, usize),
    #[error("unsupported tile resolution {0} bit(s); tiles are 1- or 3-bit")]
    Resolution(u32),
    #[error("{found} state reflection coefficients for a {bits}-bit layout (need {expected})")]
    StateCount {
        bits: u32,
        expected: usize,
        found: usize,
    },
    #[error("steering angle theta = {0} deg outside [0, 90)")]
    Theta(f64),
    #[error("state map is {rows}x{cols}, layout is {layout_rows}x{layout_cols}")]
    MapShape {
        rows: usize,
        cols: usize,
        layout_rows: usize,
        layout_cols: usize,
    },
    #[error("state {state} out of range for {bits}-bit resolution")]
    StateOutOfRange { state: usize, bits: u32 },
    #[error("malformed state map: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayLayout {
    pub tiles_x: usize,
    pub tiles_y: usize,
    pub resolution_bits: u32,
}

/// Build a wall of `tiles_x × tiles_y` tiles.
pub fn build_array(tiles_x: usize, tiles_y: usize, resolution_bits: u32) -> Result<ArrayLayout, ArrayError> {
    if tiles_x == 0 || tiles_y == 0 {
        return Err(ArrayError::NoTiles(tiles_x, tiles_y));
    }
    if !matches!(resolution_bits, 1 | 3) {
        return Err(ArrayError::Resolution(resolution_bits));
    }
    Ok(ArrayLayout {
        tiles_x,
        tiles_y,
        resolution_bits,
    })
}

impl ArrayLayout {
    pub fn cols(&self) -> usize {
        self.tiles_x * CELLS_PER_TILE_SIDE
    }

    pub fn rows(&self) -> usize {
        self.tiles_y * CELLS_PER_TILE_SIDE
    }

    pub fn tile_count(&self) -> usize {
        self.tiles_x * self.tiles_y
    }

    pub fn cell_count(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn state_count(&self) -> usize {
        1 << self.resolution_bits
    }

    pub fn width_m(&self) -> f64 {
        self.cols() as f64 * PITCH_X_M
    }

    pub fn height_m(&self) -> f64 {
        self.rows() as f64 * PITCH_Y_M
    }

    pub fn area_m2(&self) -> f64 {
        self.width_m() * self.height_m()
    }

    /// Centered position of the cell at (row, col).
    pub fn cell_position(&self, row: usize, col: usize) -> (f64, f64) {
        let x = (col as f64 + 0.5 - self.cols() as f64 / 2.0) * PITCH_X_M;
        let y = (row as f64 + 0.5 - self.rows() as f64 / 2.0) * PITCH_Y_M;
        (x, y)
    }

    /// Positions in row-major order.
    pub fn cell_positions(&self) -> Vec<(f64, f64)> {
        (0..self.rows())
            .flat_map(|r| (0..self.cols()).map(move |c| (r, c)))
            .map(|(r, c)| self.cell_position(r, c))
            .collect()
    }

    fn check_states(&self, gammas: &[Complex64]) -> Result<(), ArrayError> {
        if gammas.len() != self.state_count() {
            return Err(ArrayError::StateCount {
                bits: self.resolution_bits,
                expected: self.state_count(),
                found: gammas.len(),
            });
        }
        Ok(())
    }
}

/// Switching-circuit power in microwatts.
pub fn power_consumption_uw(layout: &ArrayLayout) -> u64 {
    let per_tile = if layout.resolution_bits == 1 {
        TILE_POWER_1BIT_UW
    } else {
        TILE_POWER_3BIT_UW
    };
    per_tile * layout.tile_count() as u64
}

/// Switching-circuit power in watts.
pub fn power_consumption(layout: &ArrayLayout) -> f64 {
    power_consumption_uw(layout) as f64 / 1e6
}

/// Per-cell state assignment, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateMap {
    pub rows: usize,
    pub cols: usize,
    pub states: Vec<usize>,
}

impl StateMap {
    pub fn uniform(layout: &ArrayLayout, state: usize) -> Self {
        Self {
            rows: layout.rows(),
            cols: layout.cols(),
            states: vec![state; layout.cell_count()],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> usize {
        self.states[row * self.cols + col]
    }

    /// Columns reversed (x → −x).
    pub fn mirrored_x(&self) -> Self {
        let states = (0..self.rows)
            .flat_map(|r| (0..self.cols).rev().map(move |c| (r, c)))
            .map(|(r, c)| self.get(r, c))
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            states,
        }
    }

    /// One line per row, states separated by single spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in self.states.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ArrayError> {
        let mut states = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ArrayError::Malformed(format!("row {}: {e}", rows + 1)))?;
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(ArrayError::Malformed(format!(
                        "row {} has {} entries, expected {c}",
                        rows + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            states.extend(row);
            rows += 1;
        }
        let cols = cols.ok_or_else(|| ArrayError::Malformed("empty map".into()))?;
        Ok(Self { rows, cols, states })
    }

    fn check(&self, layout: &ArrayLayout) -> Result<(), ArrayError> {
        if self.rows != layout.rows() || self.cols != layout.cols() || self.states.len() != layout.cell_count() {
            return Err(ArrayError::MapShape {
                rows: self.rows,
                cols: self.cols,
                layout_rows: layout.rows(),
                layout_cols: layout.cols(),
            });
        }
        if let Some(&state) = self.states.iter().find(|&&s| s >= layout.state_count()) {
            return Err(ArrayError::StateOutOfRange {
                state,
                bits: layout.resolution_bits,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub map: StateMap,
    /// Circular distance between desired and realized phase per cell, deg.
    pub residual_deg: Vec<f64>,
}

fn wavenumber(f: f64) -> f64 {
    2.0 * PI * f / SPEED_OF_LIGHT
}

fn direction_cosines(theta_deg: f64, phi_deg: f64) -> (f64, f64) {
    let (t, p) = (theta_deg.to_radians(), phi_deg.to_radians());
    (t.sin() * p.cos(), t.sin() * p.sin())
}

/// Quantize the phase gradient that steers a normally incident wave toward
/// `(theta, phi_az)` onto the available states. Exact distance ties go to
/// the lowest state index.
pub fn steering_codebook(
    layout: &ArrayLayout,
    state_gammas: &[Complex64],
    theta_deg: f64,
    phi_az_deg: f64,
    f: f64,
) -> Result<Codebook, ArrayError> {
    layout.check_states(state_gammas)?;
    if !(0.0..90.0).contains(&theta_deg) {
        return Err(ArrayError::Theta(theta_deg));
    }
    let k = wavenumber(f);
    let (u, v) = direction_cosines(theta_deg, phi_az_deg);
    let state_phase: Vec<f64> = state_gammas.iter().map(|g| rad_to_deg(g.arg())).collect();

    let mut states = Vec::with_capacity(layout.cell_count());
    let mut residual_deg = Vec::with_capacity(layout.cell_count());
    for (x, y) in layout.cell_positions() {
        let desired = wrap_360(rad_to_deg(-k * (x * u + y * v)));
        let (best, dist) = state_phase
            .iter()
            .map(|&p| circular_distance(p, desired))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
        states.push(best);
        residual_deg.push(dist);
    }
    Ok(Codebook {
        map: StateMap {
            rows: layout.rows(),
            cols: layout.cols(),
            states,
        },
        residual_deg,
    })
}

/// Far-field array factor at each `(theta, phi_az)` in degrees, weighted by
/// a `cos^q θ` element pattern.
pub fn array_factor(
    layout: &ArrayLayout,
    map: &StateMap,
    state_gammas: &[Complex64],
    f: f64,
    directions: &[(f64, f64)],
    element_exponent: f64,
) -> Result<Vec<Complex64>, ArrayError> {
    layout.check_states(state_gammas)?;
    map.check(layout)?;
    let k = wavenumber(f);
    let cells: Vec<((f64, f64), Complex64)> = layout
        .cell_positions()
        .into_iter()
        .zip(map.states.iter().map(|&s| state_gammas[s]))
        .collect();
    Ok(directions
        .iter()
        .map(|&(theta, phi)| {
            let (u, v) = direction_cosines(theta, phi);
            let sum: Complex64 = cells
                .iter()
                .map(|&((x, y), g)| g * Complex64::from_polar(1.0, k * (x * u + y * v)))
                .sum();
            let element = theta.to_radians().cos().max(0.0).powf(element_exponent);
            sum * element
        })
        .collect())
}

/// `20·log10(|AF| / max |AF|)`, floored at −300 dB.
pub fn normalized_db(af: &[Complex64]) -> Vec<f64> {
    let peak = af.iter().map(|z| z.norm()).fold(0.0, f64::max);
    af.iter()
        .map(|z| {
            if peak == 0.0 {
                -300.0
            } else {
                (20.0 * (z.norm() / peak).log10()).max(-300.0)
            }
        })
        .collect()
}

/// `theta_deg,phi_deg,af_db` rows.
pub fn pattern_csv(directions: &[(f64, f64)], af_db: &[f64]) -> String {
    let mut out = String::from("theta_deg,phi_deg,af_db\n");
    for (&(t, p), db) in directions.iter().zip(af_db) {
        let _ = writeln!(out, "{t},{p},{db}");
    }
    out
}

/// θ cut at fixed azimuth, `start..=stop` in `step` increments.
pub fn theta_cut(start: f64, stop: f64, step: f64, phi_az: f64) -> Vec<(f64, f64)> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| (start + i as f64 * step, phi_az)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LedColor {
    Black,
    Cyan,
    Red,
    Magenta,
    Green,
    Yellow,
    Blue,
    White,
}

impl LedColor {
    pub fn name(self) -> &'static str {
        match self {
            LedColor::Black => "black",
            LedColor::Cyan => "cyan",
            LedColor::Red => "red",
            LedColor::Magenta => "magenta",
            LedColor::Green => "green",
            LedColor::Yellow => "yellow",
            LedColor::Blue => "blue",
            LedColor::White => "white",
        }
    }
}

/// Indicator color by nominal phase in 45° steps.
const PHASE_COLORS: [LedColor; 8] = [
    LedColor::Black,
    LedColor::Cyan,
    LedColor::Red,
    LedColor::Magenta,
    LedColor::Green,
    LedColor::Yellow,
    LedColor::Blue,
    LedColor::White,
];

/// LED color shown for `state`. A 1-bit cell's states sit at 0° and 180°.
pub fn led_color(state: usize, resolution_bits: u32) -> Result<LedColor, ArrayError> {
    match resolution_bits {
        1 | 3 => {}
        other => return Err(ArrayError::Resolution(other)),
    }
    if state >= 1 << resolution_bits {
        return Err(ArrayError::StateOutOfRange {
            state,
            bits: resolution_bits,
        });
    }
    let step = 8 >> resolution_bits;
    Ok(PHASE_COLORS[state * step])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ideal_states(bits: u32) -> Vec<Complex64> {
        let n = 1usize << bits;
        (0..n)
            .map(|i| Complex64::from_polar(1.0, (i as f64 * 360.0 / n as f64).to_radians()))
            .collect()
    }

    #[test]
    fn wall_of_six_by_six() {
        let layout = build_array(6, 6, 1).unwrap();
        assert_eq!(layout.cell_count(), 576);
        assert_abs_diff_eq!(layout.width_m(), 1.44, epsilon = 1e-12);
        assert_abs_diff_eq!(layout.height_m(), 1.08, epsilon = 1e-12);
        assert_abs_diff_eq!(layout.area_m2(), 1.5552, epsilon = 1e-12);
    }

    #[test]
    fn single_tile_and_bad_inputs() {
        assert_eq!(build_array(1, 1, 3).unwrap().cell_count(), 16);
        assert_eq!(build_array(0, 2, 1), Err(ArrayError::NoTiles(0, 2)));
        assert_eq!(build_array(1, 1, 2), Err(ArrayError::Resolution(2)));
    }

    #[test]
    fn positions_are_centered() {
        let layout = build_array(1, 1, 1).unwrap();
        let pos = layout.cell_positions();
        assert_abs_diff_eq!(pos[0].0, -1.5 * PITCH_X_M, epsilon = 1e-15);
        assert_abs_diff_eq!(pos[0].1, -1.5 * PITCH_Y_M, epsilon = 1e-15);
        let (sx, sy) = pos.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        assert_abs_diff_eq!(sx, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sy, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn power_figures() {
        assert_eq!(power_consumption(&build_array(6, 6, 1).unwrap()), 7.2e-3);
        assert_eq!(power_consumption(&build_array(1, 1, 3).unwrap()), 2.2e-3);
        assert_eq!(power_consumption_uw(&build_array(3, 2, 3).unwrap()), 6 * 2_200);
    }

    #[test]
    fn broadside_codebook_is_state_zero() {
        let layout = build_array(2, 2, 3).unwrap();
        let cb = steering_codebook(&layout, &ideal_states(3), 0.0, 0.0, 3.6e9).unwrap();
        assert!(cb.map.states.iter().all(|&s| s == 0));
        assert!(cb.residual_deg.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn residual_bounds() {
        let layout = build_array(3, 2, 3).unwrap();
        let cb = steering_codebook(&layout, &ideal_states(3), 37.0, 20.0, 3.6e9).unwrap();
        assert!(cb.residual_deg.iter().all(|&r| r <= 22.5 + 1e-9));
        let layout = build_array(3, 2, 1).unwrap();
        let cb = steering_codebook(&layout, &ideal_states(1), 52.0, -70.0, 3.6e9).unwrap();
        assert!(cb.residual_deg.iter().all(|&r| r <= 90.0 + 1e-9));
    }

    #[test]
    fn codebook_argument_checks() {
        let layout = build_array(1, 1, 3).unwrap();
        assert!(matches!(
            steering_codebook(&layout, &ideal_states(1), 0.0, 0.0, 3.6e9),
            Err(ArrayError::StateCount { .. })
        ));
        assert_eq!(
            steering_codebook(&layout, &ideal_states(3), 90.0, 0.0, 3.6e9),
            Err(ArrayError::Theta(90.0))
        );
    }

    #[test]
    fn uniform_unit_reflection_peaks_at_broadside() {
        let layout = build_array(2, 3, 1).unwrap();
        let map = StateMap::uniform(&layout, 0);
        let dirs = theta_cut(-90.0, 90.0, 0.5, 0.0);
        let af = array_factor(&layout, &map, &ideal_states(1), 3.6e9, &dirs, 1.0).unwrap();
        let (imax, peak) = af
            .iter()
            .enumerate()
            .map(|(i, z)| (i, z.norm()))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert_eq!(dirs[imax].0, 0.0);
        assert_abs_diff_eq!(peak, layout.cell_count() as f64, epsilon = 1e-9);
    }

    #[test]
    fn zero_reflection_gives_zero_pattern() {
        let layout = build_array(1, 1, 1).unwrap();
        let zeros = vec![Complex64::new(0.0, 0.0); 2];
        let af = array_factor(&layout, &StateMap::uniform(&layout, 1), &zeros, 3.6e9, &[(10.0, 0.0), (0.0, 0.0)], 1.0)
            .unwrap();
        assert!(af.iter().all(|z| z.norm() == 0.0));
        assert!(normalized_db(&af).iter().all(|&d| d == -300.0));
    }

    #[test]
    fn map_shape_checked() {
        let layout = build_array(1, 1, 1).unwrap();
        let other = StateMap::uniform(&build_array(2, 1, 1).unwrap(), 0);
        assert!(matches!(
            array_factor(&layout, &other, &ideal_states(1), 3.6e9, &[(0.0, 0.0)], 1.0),
            Err(ArrayError::MapShape { .. })
        ));
        let bad = StateMap::uniform(&layout, 2);
        assert!(matches!(
            array_factor(&layout, &bad, &ideal_states(1), 3.6e9, &[(0.0, 0.0)], 1.0),
            Err(ArrayError::StateOutOfRange { .. })
        ));
    }

    #[test]
    fn state_map_text_round_trip() {
        let layout = build_array(1, 1, 3).unwrap();
        let cb = steering_codebook(&layout, &ideal_states(3), 30.0, 0.0, 3.6e9).unwrap();
        let text = cb.map.to_text();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap().split(' ').count(), 4);
        assert_eq!(StateMap::from_text(&text).unwrap(), cb.map);
        assert!(StateMap::from_text("0 1\n0\n").is_err());
    }

    #[test]
    fn led_colors() {
        assert_eq!(led_color(4, 3).unwrap(), LedColor::Green);
        assert_eq!(led_color(0, 3).unwrap(), LedColor::Black);
        assert_eq!(led_color(7, 3).unwrap(), LedColor::White);
        assert_eq!(led_color(1, 3).unwrap().name(), "cyan");
        assert_eq!(led_color(2, 3).unwrap().name(), "red");
        assert_eq!(led_color(3, 3).unwrap().name(), "magenta");
        assert_eq!(led_color(5, 3).unwrap().name(), "yellow");
        assert_eq!(led_color(6, 3).unwrap().name(), "blue");
        assert_eq!(led_color(0, 1).unwrap(), LedColor::Black);
        assert_eq!(led_color(1, 1).unwrap(), LedColor::Green);
        assert!(led_color(8, 3).is_err());
        assert!(led_color(2, 1).is_err());
    }

    #[test]
    fn theta_cut_grid() {
        let cut = theta_cut(-90.0, 90.0, 0.5, 0.0);
        assert_eq!(cut.len(), 361);
        assert_eq!(cut[180], (0.0, 0.0));
        assert_eq!(cut[360].0, 90.0);
    }
}
