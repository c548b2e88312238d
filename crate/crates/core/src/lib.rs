//! Car-following toolkit for adaptive-cruise-control vehicles built around the
//! optimal-velocity relative-velocity (OVRV) model with a constant effective
//! time-gap.
//!
//! The crate covers the full pipeline:
//!
//! - [`model`] — the OVRV acceleration law, its equilibrium structure, and the
//!   rational driving constraints.
//! - [`stability`] — string-stability verdicts (the `lambda2` criterion),
//!   transfer-function gain curves, crossover and peak frequencies, and
//!   parameter-space sweeps.
//! - [`platoon`] — fixed-step simulation of single followers and multi-vehicle
//!   platoons with amplification diagnostics.
//! - [`profiles`] — synthetic lead-vehicle velocity profiles (steps,
//!   oscillations, dips, sinusoids).
//! - [`calibrate`] — multi-start bounded Nelder-Mead fitting of model
//!   parameters to trajectory data by velocity RMSE.
//! - [`trajectory`] — GPS log ingestion, Haversine space-gaps, resampling, and
//!   sensor validation statistics.
//!
//! Grid sweeps and multi-start calibration run on rayon when the default
//! `parallel` feature is enabled; every parallel entry point has a `_serial`
//! twin that produces bit-identical results.

pub mod calibrate;
pub mod error;
pub mod model;
pub(crate) mod par;
pub mod platoon;
pub mod profiles;
pub mod series;
pub mod stability;
#[cfg(test)]
pub(crate) mod testutil;
pub mod trajectory;

pub use calibrate::{
    calibrate, calibrate_serial, evaluate, objective, rmse_velocity, CalibrationConfig,
    CalibrationProblem, CalibrationResult, ErrorRow, ErrorTable, ParamBounds, StartRecord,
    EVALUATION_NOTE,
};
pub use error::{Error, Result};
pub use model::{check_rdc_raw, ModelParams, RdcReport, VehicleState, MPH_TO_MPS};
pub use platoon::{
    empirical_lead_response, simulate_follower, simulate_platoon, sinusoid_response, Integrator,
    PlatoonEvent, PlatoonInit, PlatoonResult, PlatoonScenario, PlatoonSummary, SimEvent,
    SimEventKind, SinusoidResponse, VehicleSeries,
};
pub use profiles::{
    generate, read_profile_csv, write_profile_csv, BuiltinProfile, ProfileSpec, Segment, Transition,
};
pub use series::UniformSeries;
pub use stability::{
    analyze, bode_curve, crossover_frequency, gamma_magnitude, lambda2, peak_gain,
    peak_gain_analytic, stability_sweep, stability_sweep_serial, write_gain_csv, write_sweep_csv,
    StabilityReport, SweepCell, DEFAULT_BODE_POINTS, DEFAULT_BODE_RANGE,
};
pub use trajectory::{
    colocated_stats, haversine, pair_logs, ColocatedReport, GpsLog, GpsSample, Histogram,
    PairOptions, Trajectory, TrajectoryMeta, EARTH_RADIUS_M,
};
