//! The OVRV car-following model with a constant effective time-gap.
//!
//! The follower acceleration is
//!
//! ```text
//! dv/dt = k1 * (s - eta - tau_e * v) + k2 * (v_lead - v)
//! ```
//!
//! where `s` is the space-gap (lead rear bumper to follower front bumper),
//! `eta` the jam distance, and `tau_e` the desired effective time-gap. All
//! units are SI (m, s); mph inputs are converted at the boundary with
//! [`MPH_TO_MPS`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact miles-per-hour to meters-per-second conversion factor.
pub const MPH_TO_MPS: f64 = 0.44704;

/// The four OVRV parameters. Non-negativity (the rational driving constraints
/// plus safety) is enforced at construction so the hot simulation loops never
/// re-validate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelParams", into = "RawModelParams")]
pub struct ModelParams {
    k1: f64,
    k2: f64,
    tau_e: f64,
    eta: f64,
}

/// Flat JSON mirror of [`ModelParams`] used for (de)serialization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawModelParams {
    k1: f64,
    k2: f64,
    tau_e: f64,
    eta: f64,
}

impl TryFrom<RawModelParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawModelParams) -> Result<Self> {
        ModelParams::new(raw.k1, raw.k2, raw.tau_e, raw.eta)
    }
}

impl From<ModelParams> for RawModelParams {
    fn from(p: ModelParams) -> Self {
        RawModelParams {
            k1: p.k1,
            k2: p.k2,
            tau_e: p.tau_e,
            eta: p.eta,
        }
    }
}

impl ModelParams {
    /// Build a parameter set, rejecting non-finite or negative values.
    pub fn new(k1: f64, k2: f64, tau_e: f64, eta: f64) -> Result<Self> {
        for (name, value) in [("k1", k1), ("k2", k2), ("tau_e", tau_e), ("eta", eta)] {
            if !value.is_finite() {
                return Err(Error::NonFinite("model parameter"));
            }
            if value < 0.0 {
                return Err(Error::domain(format!(
                    "{name} = {value} violates the non-negativity constraint"
                )));
            }
        }
        Ok(ModelParams { k1, k2, tau_e, eta })
    }

    /// Gain on the spacing term [1/s^2].
    pub fn k1(&self) -> f64 {
        self.k1
    }

    /// Gain on the relative-velocity term [1/s].
    pub fn k2(&self) -> f64 {
        self.k2
    }

    /// Desired effective time-gap [s].
    pub fn tau_e(&self) -> f64 {
        self.tau_e
    }

    /// Jam distance [m]: the equilibrium space-gap at standstill.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Relaxation gain of the equivalent optimal-velocity form, `alpha = k1 * tau_e`.
    pub fn alpha(&self) -> f64 {
        self.k1 * self.tau_e
    }

    /// Relative-velocity gain of the equivalent optimal-velocity form, `beta = k2`.
    pub fn beta(&self) -> f64 {
        self.k2
    }

    /// Partial of the acceleration with respect to the space-gap: `f_s = k1`.
    pub fn f_s(&self) -> f64 {
        self.k1
    }

    /// Partial with respect to the follower velocity: `f_v = -k1 * tau_e`.
    pub fn f_v(&self) -> f64 {
        -self.k1 * self.tau_e
    }

    /// Partial with respect to the relative velocity: `f_dv = k2`.
    pub fn f_dv(&self) -> f64 {
        self.k2
    }

    /// Follower acceleration [m/s^2] for space-gap `s`, velocity `v`, and
    /// relative velocity `dv = v_lead - v`.
    ///
    /// The spacing term is evaluated as `s - (eta + tau_e*v)` so that a state
    /// produced by [`equilibrium_gap`](Self::equilibrium_gap) yields exactly
    /// zero acceleration.
    pub fn accel(&self, s: f64, v: f64, dv: f64) -> Result<f64> {
        if !(s.is_finite() && v.is_finite() && dv.is_finite()) {
            return Err(Error::NonFinite("accel input"));
        }
        Ok(self.accel_raw(s, v, dv))
    }

    /// Unchecked acceleration for hot loops; callers validate inputs up front.
    #[inline]
    pub(crate) fn accel_raw(&self, s: f64, v: f64, dv: f64) -> f64 {
        self.k1 * (s - (self.eta + self.tau_e * v)) + self.k2 * dv
    }

    /// Equilibrium space-gap `eta + tau_e * v` at velocity `v >= 0`.
    pub fn equilibrium_gap(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(Error::NonFinite("velocity"));
        }
        if v < 0.0 {
            return Err(Error::domain(format!(
                "equilibrium gap undefined for negative velocity {v}"
            )));
        }
        Ok(self.eta + self.tau_e * v)
    }

    /// Equilibrium time-gap `tau(v) = eta/v + tau_e` at velocity `v > 0`.
    ///
    /// Satisfies `v * time_gap_at(v) == equilibrium_gap(v)` and approaches
    /// `tau_e` from above as `v` grows.
    pub fn time_gap_at(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(Error::NonFinite("velocity"));
        }
        if v <= 0.0 {
            return Err(Error::domain(format!(
                "time-gap undefined at v = {v} (standstill or reversing)"
            )));
        }
        Ok(self.eta / v + self.tau_e)
    }

    /// Sign conditions on the partial derivatives. Always passes for a
    /// constructed `ModelParams`; see [`check_rdc_raw`] for unvalidated
    /// candidates.
    pub fn check_rdc(&self) -> RdcReport {
        check_rdc_raw(self.k1, self.k2, self.tau_e)
    }
}

/// Rational-driving-constraint report: `f_s >= 0`, `f_dv >= 0`, `f_v <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RdcReport {
    pub f_s_nonnegative: bool,
    pub f_dv_nonnegative: bool,
    pub f_v_nonpositive: bool,
}

impl RdcReport {
    pub fn pass(&self) -> bool {
        self.f_s_nonnegative && self.f_dv_nonnegative && self.f_v_nonpositive
    }
}

/// Evaluate the rational driving constraints from raw gains, without the
/// constructor's validation (used to diagnose candidate parameter sets).
pub fn check_rdc_raw(k1: f64, k2: f64, tau_e: f64) -> RdcReport {
    let f_s = k1;
    let f_dv = k2;
    let f_v = -k1 * tau_e;
    RdcReport {
        f_s_nonnegative: f_s >= 0.0,
        f_dv_nonnegative: f_dv >= 0.0,
        f_v_nonpositive: f_v <= 0.0,
    }
}

/// Instantaneous kinematic state of a following vehicle.
///
/// Negative values are representable; simulations flag them as diagnostic
/// events instead of clamping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Space-gap to the leader [m].
    pub s: f64,
    /// Velocity [m/s].
    pub v: f64,
}

impl VehicleState {
    pub fn new(s: f64, v: f64) -> Result<Self> {
        if !(s.is_finite() && v.is_finite()) {
            return Err(Error::NonFinite("vehicle state"));
        }
        Ok(VehicleState { s, v })
    }
}
