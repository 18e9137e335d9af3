//! Python bindings for `risnet`.

use std::fmt::Display;
use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use risnet::array as arr;
use risnet::gating::{self, GateSpec, Sweep};
use risnet::loads::{self, MicrostripLine, SwitchModel, SynthesisOptions, Termination};
use risnet::metrics;
use risnet::network::{self, TwoPortPoint};
use risnet::touchstone::{self as ts, DataFormat, FrequencyUnit};

fn value_error<E: Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn data_format(name: &str) -> PyResult<DataFormat> {
    match name.to_ascii_uppercase().as_str() {
        "RI" => Ok(DataFormat::RI),
        "MA" => Ok(DataFormat::MA),
        "DB" => Ok(DataFormat::DB),
        other => Err(PyValueError::new_err(format!("unknown data format `{other}`"))),
    }
}

fn frequency_unit(name: &str) -> PyResult<FrequencyUnit> {
    match name.to_ascii_uppercase().as_str() {
        "HZ" => Ok(FrequencyUnit::Hz),
        "KHZ" => Ok(FrequencyUnit::KHz),
        "MHZ" => Ok(FrequencyUnit::MHz),
        "GHZ" => Ok(FrequencyUnit::GHz),
        other => Err(PyValueError::new_err(format!("unknown frequency unit `{other}`"))),
    }
}

fn termination(name: &str) -> PyResult<Termination> {
    match name {
        "open" => Ok(Termination::Open),
        "short" => Ok(Termination::Short),
        other => Err(PyValueError::new_err(format!("termination must be `open` or `short`, got `{other}`"))),
    }
}

/// Touchstone network of 1 or 2 ports.
#[pyclass(name = "Network", frozen)]
struct PyNetwork {
    inner: ts::PortNetwork,
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ts::parse_touchstone(text).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: ts::read_touchstone(&path).map_err(value_error)?,
        })
    }

    #[getter]
    fn n_ports(&self) -> usize {
        self.inner.n_ports()
    }

    #[getter]
    fn reference_impedance(&self) -> f64 {
        self.inner.reference_impedance()
    }

    #[getter]
    fn frequencies(&self) -> Vec<f64> {
        self.inner.frequencies()
    }

    /// S_ij over frequency, 1-based indices.
    fn s(&self, i: usize, j: usize) -> PyResult<Vec<Complex64>> {
        let n = self.inner.n_ports();
        if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
            return Err(PyValueError::new_err(format!("S{i}{j} outside a {n}-port")));
        }
        Ok(self.inner.points().iter().map(|p| p.s.get(i - 1, j - 1)).collect())
    }

    #[pyo3(signature = (format = "MA", unit = "GHz"))]
    fn to_touchstone(&self, format: &str, unit: &str) -> PyResult<String> {
        Ok(ts::serialize_touchstone(&self.inner, data_format(format)?, frequency_unit(unit)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(n_ports={}, points={})",
            self.inner.n_ports(),
            self.inner.points().len()
        )
    }
}

/// Per-state reflection coefficients over a frequency grid.
#[pyclass(name = "ReflectionProfile", frozen)]
struct PyProfile {
    inner: ts::ReflectionProfile,
}

#[pymethods]
impl PyProfile {
    #[new]
    fn new(states: Vec<usize>, frequencies: Vec<f64>, gamma: Vec<Vec<Complex64>>) -> PyResult<Self> {
        Ok(Self {
            inner: ts::ReflectionProfile::new(states, frequencies, gamma).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ts::load_state_csv(text).map_err(value_error)?,
        })
    }

    fn to_csv(&self) -> String {
        ts::write_state_csv(&self.inner)
    }

    #[getter]
    fn states(&self) -> Vec<usize> {
        self.inner.states().to_vec()
    }

    #[getter]
    fn frequencies(&self) -> Vec<f64> {
        self.inner.frequencies().to_vec()
    }

    #[getter]
    fn bits(&self) -> u32 {
        self.inner.bits()
    }

    /// Reflection of `state` over frequency.
    fn gamma(&self, state: usize) -> PyResult<Vec<Complex64>> {
        let pos = self
            .inner
            .position_of(state)
            .ok_or_else(|| PyValueError::new_err(format!("state {state} not in profile")))?;
        Ok(self.inner.state_gamma(pos).to_vec())
    }

    /// Every state at `f`, interpolated on the grid.
    fn at(&self, f: f64) -> PyResult<Vec<Complex64>> {
        self.inner
            .gammas_interpolated(f)
            .ok_or_else(|| PyValueError::new_err(format!("{f} Hz outside the profile grid")))
    }

    fn select_states(&self, indices: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: metrics::select_states(&self.inner, &indices).map_err(value_error)?,
        })
    }

    fn sigma(&self) -> PyResult<Vec<f64>> {
        metrics::sigma_per_frequency(&self.inner).map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!(
            "ReflectionProfile(states={}, frequencies={})",
            self.inner.states().len(),
            self.inner.frequencies().len()
        )
    }
}

#[pyfunction]
fn circular_gaps(phases_deg: Vec<f64>) -> PyResult<Vec<f64>> {
    metrics::circular_gaps(&phases_deg).map_err(value_error)
}

#[pyfunction]
fn sigma_phase(gaps_deg: Vec<f64>) -> f64 {
    metrics::sigma_phase(&gaps_deg)
}

#[pyfunction]
fn effective_bits(sigma_deg: f64) -> PyResult<f64> {
    metrics::effective_bits(sigma_deg).map_err(value_error)
}

#[pyfunction]
fn sigma_threshold(bits: u32) -> PyResult<f64> {
    metrics::sigma_threshold(bits).map_err(value_error)
}

/// Bandwidth report as a dict; `band` is `None` when σ at the center
/// already exceeds the threshold.
#[pyfunction]
#[pyo3(signature = (profile, bits, f_center = 3.6e9))]
fn bandwidth<'py>(py: Python<'py>, profile: &PyProfile, bits: u32, f_center: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = metrics::bandwidth(&profile.inner, bits, f_center).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("resolution_bits", r.resolution_bits)?;
    d.set_item("states", r.states)?;
    d.set_item("threshold_deg", r.threshold_deg)?;
    d.set_item("sigma_at_center_deg", r.sigma_at_center_deg)?;
    d.set_item("frequencies_hz", r.frequencies_hz)?;
    d.set_item("sigma_deg", r.sigma_deg)?;
    d.set_item("n_bit_eff", r.n_bit_eff)?;
    d.set_item("min_magnitude_db", r.min_magnitude_db)?;
    d.set_item("band", r.band.map(|b| (b.f_low_hz, b.f_high_hz)))?;
    d.set_item("bandwidth_hz", r.bandwidth_hz)?;
    Ok(d)
}

#[pyfunction]
fn cascade_reflection(s11: Complex64, s12: Complex64, s21: Complex64, s22: Complex64, gamma_load: Complex64) -> PyResult<Complex64> {
    let p = TwoPortPoint::new(0.0, s11, s12, s21, s22).map_err(value_error)?;
    network::cascade_reflection(&p, gamma_load).map_err(value_error)
}

#[pyfunction]
fn profile_from_network(unit_cell: &PyNetwork, loads: &PyProfile) -> PyResult<PyProfile> {
    Ok(PyProfile {
        inner: network::profile_from_network(&unit_cell.inner, &loads.inner).map_err(value_error)?,
    })
}

fn line(width_m: f64, height_m: f64, epsilon_r: f64, loss_db_per_m: f64) -> PyResult<MicrostripLine> {
    MicrostripLine::new(width_m, height_m, epsilon_r, loss_db_per_m, 1e9).map_err(value_error)
}

fn switch_model(switch: Option<&PyNetwork>) -> PyResult<SwitchModel> {
    match switch {
        Some(n) => SwitchModel::from_network(n.inner.clone()).map_err(value_error),
        None => Ok(SwitchModel::Ideal),
    }
}

#[pyfunction]
#[pyo3(signature = (width_m, height_m = loads::FR4_THICKNESS, epsilon_r = loads::FR4_EPSILON_R))]
fn microstrip_eeff(width_m: f64, height_m: f64, epsilon_r: f64) -> PyResult<f64> {
    Ok(loads::microstrip_eeff(&line(width_m, height_m, epsilon_r, 0.0)?))
}

#[pyfunction]
#[pyo3(signature = (length_m, termination, f, width_m = 1.5e-3, height_m = loads::FR4_THICKNESS, epsilon_r = loads::FR4_EPSILON_R, loss_db_per_m = 0.0))]
fn stub_reflection(
    length_m: f64,
    termination: &str,
    f: f64,
    width_m: f64,
    height_m: f64,
    epsilon_r: f64,
    loss_db_per_m: f64,
) -> PyResult<Complex64> {
    let l = line(width_m, height_m, epsilon_r, loss_db_per_m)?;
    Ok(loads::stub_reflection(length_m, self::termination(termination)?, f, &l))
}

/// SP8T stub design as a list of dicts, one per state.
#[pyfunction]
#[pyo3(signature = (f_center = 3.6e9, width_m = 1.5e-3, height_m = loads::FR4_THICKNESS, epsilon_r = loads::FR4_EPSILON_R, loss_db_per_m = 0.0, switch = None))]
fn synthesize_stubs<'py>(
    py: Python<'py>,
    f_center: f64,
    width_m: f64,
    height_m: f64,
    epsilon_r: f64,
    loss_db_per_m: f64,
    switch: Option<&PyNetwork>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let design = loads::synthesize_stub_lengths(
        &switch_model(switch)?,
        &line(width_m, height_m, epsilon_r, loss_db_per_m)?,
        &SynthesisOptions::single_frequency(f_center),
    )
    .map_err(value_error)?;
    design
        .stubs()
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("state", s.state)?;
            d.set_item("termination", if s.termination == Termination::Open { "open" } else { "short" })?;
            d.set_item("length_m", s.length_m)?;
            d.set_item("residual_deg", s.residual_deg)?;
            Ok(d)
        })
        .collect()
}

/// Built-in load set: 1-bit SPDT (open/short) or 3-bit synthesized stubs
/// on a lossless 1.5 mm FR4 line.
#[pyfunction]
#[pyo3(signature = (bits, frequencies, f_center = 3.6e9, switch = None))]
fn ideal_loads(bits: u32, frequencies: Vec<f64>, f_center: f64, switch: Option<&PyNetwork>) -> PyResult<PyProfile> {
    let sw = switch_model(switch)?;
    let inner = match bits {
        1 => loads::spdt_load_profile(&sw, &frequencies),
        3 => {
            let l = MicrostripLine::fr4_lossless(1.5e-3).map_err(value_error)?;
            loads::synthesize_stub_lengths(&sw, &l, &SynthesisOptions::single_frequency(f_center))
                .and_then(|d| loads::sp8t_load_profile(&d, &frequencies))
        }
        other => return Err(PyValueError::new_err(format!("built-in loads are 1- or 3-bit, got {other}"))),
    }
    .map_err(value_error)?;
    Ok(PyProfile { inner })
}

/// Tiled wall of 4×4-cell tiles.
#[pyclass(name = "ArrayLayout", frozen)]
struct PyLayout {
    inner: arr::ArrayLayout,
}

#[pymethods]
impl PyLayout {
    #[new]
    fn new(tiles_x: usize, tiles_y: usize, bits: u32) -> PyResult<Self> {
        Ok(Self {
            inner: arr::build_array(tiles_x, tiles_y, bits).map_err(value_error)?,
        })
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols()
    }

    #[getter]
    fn cell_count(&self) -> usize {
        self.inner.cell_count()
    }

    #[getter]
    fn area_m2(&self) -> f64 {
        self.inner.area_m2()
    }

    /// Bias power in watts.
    #[getter]
    fn power_w(&self) -> f64 {
        arr::power_consumption(&self.inner)
    }

    /// Row-major state map and per-cell residuals for a steering direction.
    fn steering_codebook(
        &self,
        state_gammas: Vec<Complex64>,
        theta_deg: f64,
        phi_deg: f64,
        f: f64,
    ) -> PyResult<(Vec<usize>, Vec<f64>)> {
        let cb = arr::steering_codebook(&self.inner, &state_gammas, theta_deg, phi_deg, f).map_err(value_error)?;
        Ok((cb.map.states, cb.residual_deg))
    }

    /// Normalized |AF| in dB along a θ cut.
    #[pyo3(signature = (states, state_gammas, f, theta_start = -90.0, theta_stop = 90.0, theta_step = 0.5, phi_deg = 0.0, element_exponent = 1.0))]
    #[allow(clippy::too_many_arguments)]
    fn pattern(
        &self,
        states: Vec<usize>,
        state_gammas: Vec<Complex64>,
        f: f64,
        theta_start: f64,
        theta_stop: f64,
        theta_step: f64,
        phi_deg: f64,
        element_exponent: f64,
    ) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let map = arr::StateMap {
            rows: self.inner.rows(),
            cols: self.inner.cols(),
            states,
        };
        let dirs = arr::theta_cut(theta_start, theta_stop, theta_step, phi_deg);
        let af = arr::array_factor(&self.inner, &map, &state_gammas, f, &dirs, element_exponent).map_err(value_error)?;
        Ok((dirs.iter().map(|d| d.0).collect(), arr::normalized_db(&af)))
    }
}

#[pyfunction]
fn led_color(state: usize, bits: u32) -> PyResult<&'static str> {
    arr::led_color(state, bits).map(|c| c.name()).map_err(value_error)
}

#[pyfunction]
fn synth_multipath(paths: Vec<(f64, Complex64)>, frequencies: Vec<f64>) -> PyResult<Vec<Complex64>> {
    Ok(gating::synth_multipath(&paths, &frequencies).map_err(value_error)?.values().to_vec())
}

#[pyfunction]
#[pyo3(signature = (frequencies, values, t_start, t_stop, edge_fraction = 0.25, kaiser_beta = 6.0))]
fn time_gate(
    frequencies: Vec<f64>,
    values: Vec<Complex64>,
    t_start: f64,
    t_stop: f64,
    edge_fraction: f64,
    kaiser_beta: f64,
) -> PyResult<Vec<Complex64>> {
    let sweep = Sweep::new(frequencies, values).map_err(value_error)?;
    let gate = GateSpec {
        edge_fraction,
        kaiser_beta,
        ..GateSpec::new(t_start, t_stop)
    };
    Ok(gating::time_gate(&sweep, &gate).map_err(value_error)?.values().to_vec())
}

#[pyfunction]
fn normalize_to_plate(frequencies: Vec<f64>, dut: Vec<Complex64>, reference: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    let d = Sweep::new(frequencies.clone(), dut).map_err(value_error)?;
    let r = Sweep::new(frequencies, reference).map_err(value_error)?;
    Ok(gating::normalize_to_plate(&d, &r).map_err(value_error)?.values().to_vec())
}

#[pymodule]
#[pyo3(name = "risnet")]
fn risnet_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyProfile>()?;
    m.add_class::<PyLayout>()?;
    m.add_function(wrap_pyfunction!(circular_gaps, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_phase, m)?)?;
    m.add_function(wrap_pyfunction!(effective_bits, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(cascade_reflection, m)?)?;
    m.add_function(wrap_pyfunction!(profile_from_network, m)?)?;
    m.add_function(wrap_pyfunction!(microstrip_eeff, m)?)?;
    m.add_function(wrap_pyfunction!(stub_reflection, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_stubs, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_loads, m)?)?;
    m.add_function(wrap_pyfunction!(led_color, m)?)?;
    m.add_function(wrap_pyfunction!(synth_multipath, m)?)?;
    m.add_function(wrap_pyfunction!(time_gate, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_to_plate, m)?)?;
    Ok(())
}
