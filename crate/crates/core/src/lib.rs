//! Network-level modeling of reconfigurable intelligent surfaces.
//!
//! - [`touchstone`]: Touchstone v1 and per-state CSV exchange.
//! - [`network`]: S-parameter resampling and the load cascade.
//! - [`loads`]: SPDT and stub-network terminations, stub synthesis.
//! - [`metrics`]: phase standard deviation, effective bits, bandwidth.
//! - [`array`]: tile geometry, codebooks, array factor, power, LED colors.
//! - [`gating`]: time gating and reference-plate normalization.

// `!(x > 0.0)` style checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angle;
pub mod array;
pub mod gating;
pub mod loads;
pub mod metrics;
pub mod network;
pub mod optimize;
pub mod touchstone;

pub use array::{
    array_factor, build_array, led_color, power_consumption, steering_codebook, ArrayError, ArrayLayout,
    Codebook, LedColor, StateMap,
};
pub use gating::{normalize_to_plate, synth_multipath, time_gate, GateSpec, GatingError, Sweep};
pub use loads::{
    microstrip_eeff, sp8t_load_profile, spdt_load_profile, stub_reflection, synthesize_stub_lengths, LoadError,
    MicrostripLine, StubNetworkDesign, SwitchModel, SynthesisOptions, Termination,
};
pub use metrics::{
    bandwidth, circular_gaps, effective_bits, select_states, sigma_phase, sigma_threshold, BandwidthReport,
    MetricsError,
};
pub use network::{cascade_reflection, interpolate_at, profile_from_network, NetworkError, TwoPortPoint};
pub use touchstone::{
    load_state_csv, parse_touchstone, serialize_touchstone, DataFormat, FrequencyUnit, PortNetwork,
    ProfileError, ReflectionProfile, TouchstoneError,
};
