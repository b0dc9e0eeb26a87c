//! Phasor-domain simulator of a three-channel omnidirectional wireless power
//! transfer system: three orthogonal transmitter/repeater pairs driven in
//! parallel from one source, and a receiver moving around them.
//!
//! The pipeline is geometry → mutual inductances → 7×7 impedance solve →
//! transmitter polarity control → sweep records.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod circuit;
pub mod controller;
pub mod error;
pub mod geometry;
pub mod magnetics;
pub mod quadrature;
pub mod scenario;
pub mod sweep;
pub mod verify;

pub use circuit::{
    analytic_currents, assemble_impedance, input_impedance, performance, series_capacitance,
    solve_full, tune_xt, v_s_from_dc, ImpedanceMatrix, PerformanceReport, PhasorSolution, Sign,
    SystemConfig,
};
pub use controller::{detect_out_of_phase, run_controller, ControllerSettings, PolarityState};
pub use error::{Error, Result};
pub use geometry::{
    make_helical_coil, prototype_layout, Coil, CoilSpec, FilamentLoop, LayoutParams, Pose,
    SystemLayout, Vec3,
};
pub use magnetics::{
    coil_mutual, coupling_set, loop_mutual, maxwell_coaxial, CouplingSet, CrossMatrix, MU0,
};
pub use num_complex::Complex64;
pub use quadrature::QuadratureSpec;
pub use scenario::Scenario;
pub use sweep::{
    coupling_trace, emit_csv, read_csv, run_sweep, solve_at, summarize, Summary, Sweep, SweepRecord,
};
