//! Fixed-step simulation of followers and platoons.
//!
//! Vehicle `i` follows the simulated velocity of vehicle `i − 1`; vehicle 0
//! follows the lead profile. States are never clamped: negative space-gaps or
//! velocities are logged as diagnostic events instead, preserving the exact
//! correspondence between the simulation and the linear analysis in
//! [`crate::stability`].

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, VehicleState};
use crate::profiles::{generate, ProfileSpec};
use crate::series::UniformSeries;

/// Fixed-step integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Explicit Euler at the series rate (the calibration scheme).
    #[default]
    Euler,
    /// Classical 4-stage Runge-Kutta; lead velocity (and disturbance) are
    /// linearly interpolated at the half-steps.
    Rk4,
}

/// A diagnostic crossing into a physically implausible state. Logged when the
/// sign flips, not on every step spent negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub t: f64,
    pub kind: SimEventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimEventKind {
    NegativeGap,
    NegativeVelocity,
}

/// Simulated state history of one vehicle: space-gap, velocity, and
/// acceleration sampled on the lead series' grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSeries {
    pub t0: f64,
    pub dt: f64,
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub events: Vec<SimEvent>,
}

impl VehicleSeries {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// The velocity channel as a standalone series (e.g. to feed the next
    /// vehicle or the calibration error metric).
    pub fn velocity_series(&self) -> UniformSeries {
        UniformSeries::new(self.t0, self.dt, self.v.clone())
            .expect("simulated velocity series is uniform by construction")
    }
}

fn window_stats(values: &[f64], t0: f64, dt: f64, from_t: f64) -> (f64, f64) {
    let start = if from_t <= t0 {
        0
    } else {
        (((from_t - t0) / dt - 1e-9).ceil() as usize).min(values.len() - 1)
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in &values[start..] {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (hi - lo, lo)
}

/// Simulate one follower against a lead velocity series.
///
/// Euler: `s_{n+1} = s_n + dt·(v_{l,n} − v_n)`,
/// `v_{n+1} = v_n + dt·(accel(s_n, v_n, v_{l,n} − v_n) + d_n)`. RK4 evaluates
/// the same right-hand side at the classical four stages. The recorded
/// acceleration channel holds the right-hand side at each sample.
pub fn simulate_follower(
    params: &ModelParams,
    lead: &UniformSeries,
    s0: f64,
    v0: f64,
    dt: f64,
    integrator: Integrator,
) -> Result<VehicleSeries> {
    if (lead.dt() - dt).abs() > 1e-12 * dt {
        return Err(Error::format(format!(
            "lead series is sampled at dt = {} but the simulation expects dt = {dt}; resample upstream",
            lead.dt()
        )));
    }
    integrate(params, lead, s0, v0, None, integrator)
}

fn integrate(
    params: &ModelParams,
    lead: &UniformSeries,
    s0: f64,
    v0: f64,
    disturbance: Option<&UniformSeries>,
    integrator: Integrator,
) -> Result<VehicleSeries> {
    if !(s0.is_finite() && v0.is_finite()) {
        return Err(Error::NonFinite("initial state"));
    }
    let dt = lead.dt();
    let n = lead.len();
    let lv = lead.values();
    if let Some(d) = disturbance {
        if d.len() != n || (d.dt() - dt).abs() > 1e-12 * dt {
            return Err(Error::format(format!(
                "disturbance series ({} samples at dt = {}) does not match the lead grid ({n} samples at dt = {dt})",
                d.len(),
                d.dt()
            )));
        }
    }
    let dist = |i: usize| disturbance.map_or(0.0, |d| d.values()[i]);
    let dist_at = |t: f64| disturbance.map_or(0.0, |d| d.interp(t));

    let mut out = VehicleSeries {
        t0: lead.t0(),
        dt,
        s: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        events: Vec::new(),
    };
    let mut s = s0;
    let mut v = v0;
    let mut gap_negative = false;
    let mut vel_negative = false;
    for (i, &lv_i) in lv.iter().enumerate() {
        let a_i = params.accel_raw(s, v, lv_i - v) + dist(i);
        out.s.push(s);
        out.v.push(v);
        out.a.push(a_i);

        let t = lead.time_at(i);
        if s < 0.0 && !gap_negative {
            out.events.push(SimEvent {
                t,
                kind: SimEventKind::NegativeGap,
            });
        }
        gap_negative = s < 0.0;
        if v < 0.0 && !vel_negative {
            out.events.push(SimEvent {
                t,
                kind: SimEventKind::NegativeVelocity,
            });
        }
        vel_negative = v < 0.0;

        if i + 1 == n {
            break;
        }
        match integrator {
            Integrator::Euler => {
                let s_next = s + dt * (lv_i - v);
                let v_next = v + dt * a_i;
                s = s_next;
                v = v_next;
            }
            Integrator::Rk4 => {
                let f = |t: f64, s: f64, v: f64| {
                    let vl = lead.interp(t);
                    (vl - v, params.accel_raw(s, v, vl - v) + dist_at(t))
                };
                let (k1s, k1v) = f(t, s, v);
                let (k2s, k2v) = f(t + 0.5 * dt, s + 0.5 * dt * k1s, v + 0.5 * dt * k1v);
                let (k3s, k3v) = f(t + 0.5 * dt, s + 0.5 * dt * k2s, v + 0.5 * dt * k2v);
                let (k4s, k4v) = f(t + dt, s + dt * k3s, v + dt * k3v);
                s += dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
                v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            }
        }
        if !(s.is_finite() && v.is_finite()) {
            return Err(Error::Singular(format!(
                "simulation diverged to a non-finite state at t = {}",
                lead.time_at(i + 1)
            )));
        }
    }
    Ok(out)
}

/// How follower states are initialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatoonInit {
    /// Each vehicle starts at its equilibrium gap for the lead's initial
    /// velocity, moving at that velocity.
    Equilibrium,
    /// Explicit per-vehicle (space-gap, velocity), front to back.
    Explicit(Vec<VehicleState>),
}

/// A platoon simulation setup: lead profile, ordered follower parameters
/// (front to back), and integration settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonScenario {
    pub lead: UniformSeries,
    pub followers: Vec<ModelParams>,
    pub dt: f64,
    /// Truncate the lead profile to this span; `None` runs its full length.
    pub duration: Option<f64>,
    pub init: PlatoonInit,
    /// Optional per-vehicle acceleration offsets, one series per follower on
    /// the same grid as the lead.
    pub disturbances: Option<Vec<UniformSeries>>,
    pub integrator: Integrator,
}

impl PlatoonScenario {
    /// A scenario with equilibrium initialization, no disturbance, Euler
    /// stepping, and the lead's own sampling rate.
    pub fn new(lead: UniformSeries, followers: Vec<ModelParams>) -> Self {
        let dt = lead.dt();
        PlatoonScenario {
            lead,
            followers,
            dt,
            duration: None,
            init: PlatoonInit::Equilibrium,
            disturbances: None,
            integrator: Integrator::Euler,
        }
    }

    /// Homogeneous platoon: the same parameters for every follower.
    pub fn homogeneous(lead: UniformSeries, params: ModelParams, n_followers: usize) -> Self {
        PlatoonScenario::new(lead, vec![params; n_followers])
    }

    fn validate(&self) -> Result<UniformSeries> {
        if self.followers.is_empty() {
            return Err(Error::domain("platoon needs at least one follower"));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::domain(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if (self.lead.dt() - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::format(format!(
                "lead series dt = {} does not match scenario dt = {}",
                self.lead.dt(),
                self.dt
            )));
        }
        let lead = match self.duration {
            None => self.lead.clone(),
            Some(d) => {
                if d < self.dt {
                    return Err(Error::domain(format!(
                        "duration {d} is shorter than one step ({})",
                        self.dt
                    )));
                }
                if d > self.lead.duration() + 1e-9 {
                    return Err(Error::domain(format!(
                        "duration {d} exceeds the lead profile span {}",
                        self.lead.duration()
                    )));
                }
                self.lead.prefix((d / self.dt + 1e-9).floor() as usize + 1)
            }
        };
        if let PlatoonInit::Explicit(states) = &self.init {
            if states.len() != self.followers.len() {
                return Err(Error::format(format!(
                    "{} initial states for {} followers",
                    states.len(),
                    self.followers.len()
                )));
            }
        }
        if let Some(d) = &self.disturbances {
            if d.len() != self.followers.len() {
                return Err(Error::format(format!(
                    "{} disturbance series for {} followers",
                    d.len(),
                    self.followers.len()
                )));
            }
        }
        Ok(lead)
    }
}

/// Simulated platoon: the (possibly truncated) lead series plus one
/// [`VehicleSeries`] per follower, front to back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatoonResult {
    pub lead: UniformSeries,
    pub vehicles: Vec<VehicleSeries>,
}

/// A logged event attributed to a platoon position (1 = first follower).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatoonEvent {
    pub vehicle: usize,
    pub t: f64,
    pub kind: SimEventKind,
}

/// Amplification diagnostics for a platoon run. Vehicle 0 is the lead;
/// `amplification_ratios[i]` is vehicle `i+1`'s peak-to-peak velocity divided
/// by vehicle `i`'s (`None` when the denominator is zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatoonSummary {
    pub dt: f64,
    /// Statistics are computed over `t >= window_start`.
    pub window_start: f64,
    pub peak_to_peak_mps: Vec<f64>,
    pub amplification_ratios: Vec<Option<f64>>,
    pub min_velocity_mps: Vec<f64>,
    pub events: Vec<PlatoonEvent>,
}

impl PlatoonResult {
    /// Diagnostics over the full simulated span.
    pub fn summary(&self) -> PlatoonSummary {
        self.summary_after(self.lead.t0())
    }

    /// Diagnostics over `t >= from_t` (peak-to-peak and minima only; the
    /// event log always covers the full run).
    pub fn summary_after(&self, from_t: f64) -> PlatoonSummary {
        let t0 = self.lead.t0();
        let dt = self.lead.dt();
        let mut ptp = Vec::with_capacity(self.vehicles.len() + 1);
        let mut min_v = Vec::with_capacity(self.vehicles.len() + 1);
        let (lead_ptp, lead_min) = window_stats(self.lead.values(), t0, dt, from_t);
        ptp.push(lead_ptp);
        min_v.push(lead_min);
        for veh in &self.vehicles {
            let (p, m) = window_stats(&veh.v, veh.t0, veh.dt, from_t);
            ptp.push(p);
            min_v.push(m);
        }
        let ratios = ptp
            .windows(2)
            .map(|w| {
                if w[0] > 1e-12 {
                    Some(w[1] / w[0])
                } else {
                    None
                }
            })
            .collect();
        let mut events = Vec::new();
        for (i, veh) in self.vehicles.iter().enumerate() {
            for e in &veh.events {
                events.push(PlatoonEvent {
                    vehicle: i + 1,
                    t: e.t,
                    kind: e.kind,
                });
            }
        }
        PlatoonSummary {
            dt,
            window_start: from_t,
            peak_to_peak_mps: ptp,
            amplification_ratios: ratios,
            min_velocity_mps: min_v,
            events,
        }
    }

    /// Long-form CSV: `t,vehicle_index,space_gap_m,velocity_mps,accel_mps2`,
    /// grouped by vehicle. The lead appears as vehicle 0 with empty space-gap
    /// and acceleration fields.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "t",
            "vehicle_index",
            "space_gap_m",
            "velocity_mps",
            "accel_mps2",
        ])?;
        for (i, &v) in self.lead.values().iter().enumerate() {
            w.serialize((self.lead.time_at(i), 0usize, None::<f64>, v, None::<f64>))?;
        }
        for (idx, veh) in self.vehicles.iter().enumerate() {
            for i in 0..veh.len() {
                w.serialize((
                    veh.time_at(i),
                    idx + 1,
                    Some(veh.s[i]),
                    veh.v[i],
                    Some(veh.a[i]),
                ))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Run a platoon scenario. Vehicle `i` follows vehicle `i − 1`'s simulated
/// velocity; vehicle 0 follows the lead profile.
pub fn simulate_platoon(scenario: &PlatoonScenario) -> Result<PlatoonResult> {
    let lead = scenario.validate()?;
    let mut vehicles = Vec::with_capacity(scenario.followers.len());
    let mut current_lead = lead.clone();
    for (i, params) in scenario.followers.iter().enumerate() {
        let (s0, v0) = match &scenario.init {
            PlatoonInit::Equilibrium => {
                let v0 = current_lead.values()[0];
                (params.equilibrium_gap(v0)?, v0)
            }
            PlatoonInit::Explicit(states) => (states[i].s, states[i].v),
        };
        let disturbance = scenario.disturbances.as_ref().map(|d| &d[i]);
        let series = integrate(
            params,
            &current_lead,
            s0,
            v0,
            disturbance,
            scenario.integrator,
        )?;
        current_lead = series.velocity_series();
        vehicles.push(series);
    }
    Ok(PlatoonResult { lead, vehicles })
}

/// A platoon response to a sinusoidal lead, with steady-state amplitude
/// estimates read off the final cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidResponse {
    pub platoon: PlatoonResult,
    /// Half the peak-to-peak over the measurement window, lead first.
    pub amplitudes_mps: Vec<f64>,
    /// `amplitudes[i+1] / amplitudes[i]`; `None` when the denominator is
    /// zero. For small amplitudes this approaches the transfer-function
    /// magnitude at the driving frequency.
    pub adjacent_ratios: Vec<Option<f64>>,
}

/// Simulate a homogeneous platoon behind a lead that cruises at `v_star` for
/// `warmup` seconds and then oscillates sinusoidally. Steady-state amplitude
/// per vehicle is half the peak-to-peak over the last two full periods (one,
/// if the duration allows only that); at least one full period after the
/// warmup is required. For the ratios to read as steady-state gains, allow
/// roughly ten periods of transient before the measurement window.
#[allow(clippy::too_many_arguments)]
pub fn sinusoid_response(
    params: &ModelParams,
    n_followers: usize,
    v_star: f64,
    amplitude: f64,
    omega: f64,
    warmup: f64,
    duration: f64,
    dt: f64,
) -> Result<SinusoidResponse> {
    let period = 2.0 * std::f64::consts::PI / omega;
    if !duration.is_finite() || duration < period {
        return Err(Error::domain(format!(
            "duration {duration} s is shorter than one period ({period:.3} s) after warmup"
        )));
    }
    let lead = generate(&ProfileSpec::Sinusoid {
        v_star_mps: v_star,
        amplitude_mps: amplitude,
        omega_rad_s: omega,
        warmup_s: warmup,
        duration_s: duration,
        dt,
    })?;
    let scenario = PlatoonScenario::homogeneous(lead, *params, n_followers);
    let platoon = simulate_platoon(&scenario)?;

    let n_periods = (duration / period + 1e-9).floor().min(2.0);
    let t_end = platoon.lead.time_at(platoon.lead.len() - 1);
    let window = platoon.summary_after(t_end - n_periods * period);
    let amplitudes: Vec<f64> = window.peak_to_peak_mps.iter().map(|p| 0.5 * p).collect();
    let adjacent_ratios = amplitudes
        .windows(2)
        .map(|w| {
            if w[0] > 1e-12 {
                Some(w[1] / w[0])
            } else {
                None
            }
        })
        .collect();
    Ok(SinusoidResponse {
        platoon,
        amplitudes_mps: amplitudes,
        adjacent_ratios,
    })
}

/// Simulate a homogeneous platoon behind a recorded lead velocity series
/// (resampled to `dt` if needed), initialized at equilibrium of the first
/// sample. Peak-to-peak amplification and per-vehicle minimum velocities are
/// available via [`PlatoonResult::summary`].
pub fn empirical_lead_response(
    params: &ModelParams,
    recorded_lead: &UniformSeries,
    n_followers: usize,
    dt: f64,
) -> Result<PlatoonResult> {
    if recorded_lead.len() < 2 {
        return Err(Error::format(
            "recorded lead series needs at least 2 samples",
        ));
    }
    let lead = recorded_lead.resample(dt)?;
    let scenario = PlatoonScenario::homogeneous(lead, *params, n_followers);
    simulate_platoon(&scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Segment;
    use crate::testutil::{max_setting, min_setting};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(k1: f64, k2: f64, tau_e: f64, eta: f64) -> ModelParams {
        ModelParams::new(k1, k2, tau_e, eta).unwrap()
    }

    fn step_profile(cruise: f64, drop: f64, dt: f64) -> UniformSeries {
        generate(&ProfileSpec::StepSchedule {
            segments: vec![
                Segment::new(cruise, 60.0),
                Segment::new(cruise - drop, 60.0),
                Segment::new(cruise, 180.0),
            ],
            dt,
            transition: crate::profiles::Transition::Instantaneous,
        })
        .unwrap()
    }

    #[test]
    fn equilibrium_is_a_bitwise_fixed_point() {
        let p = min_setting();
        let lead = UniformSeries::constant(20.0, 1000.0, 0.1).unwrap();
        assert_eq!(lead.len(), 10_001);
        let s0 = p.equilibrium_gap(20.0).unwrap();
        for integrator in [Integrator::Euler, Integrator::Rk4] {
            let out = simulate_follower(&p, &lead, s0, 20.0, 0.1, integrator).unwrap();
            assert!(out.s.iter().all(|&s| s.to_bits() == s0.to_bits()));
            assert!(out.v.iter().all(|&v| v.to_bits() == 20.0f64.to_bits()));
            assert!(out.a.iter().all(|&a| a == 0.0));
            assert!(out.events.is_empty());
        }
    }

    #[test]
    fn euler_single_step_reference() {
        let p = min_setting();
        let lead = UniformSeries::constant(20.0, 1.0, 0.1).unwrap();
        let out = simulate_follower(&p, &lead, 20.0, 20.0, 0.1, Integrator::Euler).unwrap();
        assert_eq!(out.s[1], 20.0); // dv = 0 on the first step
        let expected_v1 = 20.0 + 0.1 * 0.0782 * (20.0 - 8.3365 - 0.5162 * 20.0);
        assert_relative_eq!(out.v[1], expected_v1, max_relative = 1e-12);
        assert_abs_diff_eq!(out.v[1], 20.010474, epsilon = 1e-6);
    }

    #[test]
    fn dt_mismatch_is_a_format_error() {
        let p = min_setting();
        let lead = UniformSeries::constant(20.0, 10.0, 0.1).unwrap();
        let err = simulate_follower(&p, &lead, 20.0, 20.0, 0.2, Integrator::Euler).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    /// Convergence orders measured against a fine-step RK4 reference on a
    /// ramp lead (whose linear interpolation is exact, so the half-step
    /// sampling does not cap RK4's order).
    #[test]
    fn integrator_convergence_orders() {
        let p = params(0.5, 0.5, 0.75, 8.0);
        let ramp = |dt: f64| {
            let n = (40.0 / dt).round() as usize + 1;
            let values = (0..n).map(|i| 20.0 + 0.1 * (i as f64 * dt)).collect();
            UniformSeries::new(0.0, dt, values).unwrap()
        };
        let s0 = p.equilibrium_gap(15.0).unwrap(); // off-equilibrium start
        let run = |dt: f64, integ: Integrator| {
            simulate_follower(&p, &ramp(dt), s0, 15.0, dt, integ).unwrap()
        };
        let reference = run(0.025, Integrator::Rk4);
        let max_err = |coarse: &VehicleSeries| {
            let stride = (coarse.dt / 0.025).round() as usize;
            coarse
                .v
                .iter()
                .enumerate()
                .map(|(i, v)| (v - reference.v[i * stride]).abs())
                .fold(0.0f64, f64::max)
        };

        let e_euler_2dt = max_err(&run(0.4, Integrator::Euler));
        let e_euler_dt = max_err(&run(0.2, Integrator::Euler));
        let ratio_euler = e_euler_2dt / e_euler_dt;
        assert!(
            (1.6..2.5).contains(&ratio_euler),
            "Euler halving ratio {ratio_euler} (errors {e_euler_2dt}, {e_euler_dt})"
        );

        let e_rk4_2dt = max_err(&run(0.4, Integrator::Rk4));
        let e_rk4_dt = max_err(&run(0.2, Integrator::Rk4));
        let ratio_rk4 = e_rk4_2dt / e_rk4_dt;
        assert!(
            (10.0..24.0).contains(&ratio_rk4),
            "RK4 halving ratio {ratio_rk4} (errors {e_rk4_2dt}, {e_rk4_dt})"
        );
    }

    #[test]
    fn euler_and_rk4_agree_on_smooth_lead() {
        // Euler at dt = 0.01 and RK4 at dt = 0.1 both track RK4 at dt = 0.01
        // on a sinusoidal lead.
        let p = params(0.5, 0.5, 0.75, 8.0);
        let lead = |dt: f64| {
            generate(&ProfileSpec::Sinusoid {
                v_star_mps: 20.0,
                amplitude_mps: 1.0,
                omega_rad_s: 0.5,
                warmup_s: 0.0,
                duration_s: 60.0,
                dt,
            })
            .unwrap()
        };
        let s0 = p.equilibrium_gap(20.0).unwrap();
        let fine = simulate_follower(&p, &lead(0.01), s0, 20.0, 0.01, Integrator::Rk4).unwrap();
        let euler_fine =
            simulate_follower(&p, &lead(0.01), s0, 20.0, 0.01, Integrator::Euler).unwrap();
        let rk4_coarse = simulate_follower(&p, &lead(0.1), s0, 20.0, 0.1, Integrator::Rk4).unwrap();

        let max_err_euler = euler_fine
            .v
            .iter()
            .zip(&fine.v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(
            max_err_euler < 5e-3,
            "Euler fine-step error {max_err_euler}"
        );

        let max_err_rk4 = rk4_coarse
            .v
            .iter()
            .enumerate()
            .map(|(i, v)| (v - fine.v[i * 10]).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err_rk4 < 1e-3, "RK4 coarse-step error {max_err_rk4}");
    }

    #[test]
    fn step_platoon_amplification_direction() {
        let lead = step_profile(20.0, 5.0, 0.1);

        // Unstable setting: overshoot grows along the platoon.
        let unstable = PlatoonScenario::homogeneous(lead.clone(), params(0.5, 0.5, 0.75, 8.0), 9);
        let result = simulate_platoon(&unstable).unwrap();
        let summary = result.summary();
        assert_eq!(summary.peak_to_peak_mps.len(), 10);
        for (i, r) in summary.amplification_ratios.iter().enumerate() {
            assert!(r.unwrap() > 1.0, "pair {i} ratio {r:?}");
        }
        // Growing overshoot: last vehicle swings well beyond the 5 m/s step.
        assert!(summary.peak_to_peak_mps[9] > summary.peak_to_peak_mps[1]);

        // Stable setting: responses smooth out along the platoon.
        let stable = PlatoonScenario::homogeneous(lead, params(0.5, 0.5, 3.2, 8.0), 9);
        let summary = simulate_platoon(&stable).unwrap().summary();
        for (i, r) in summary.amplification_ratios.iter().enumerate() {
            assert!(r.unwrap() <= 1.0 + 1e-3, "pair {i} ratio {r:?}");
        }
    }

    #[test]
    fn constant_lead_platoon_is_degenerate() {
        let lead = UniformSeries::constant(25.0, 120.0, 0.1).unwrap();
        let scenario = PlatoonScenario::homogeneous(lead, min_setting(), 4);
        let summary = simulate_platoon(&scenario).unwrap().summary();
        assert!(summary.peak_to_peak_mps.iter().all(|&p| p == 0.0));
        assert!(summary.amplification_ratios.iter().all(|r| r.is_none()));
        assert!(summary.events.is_empty());
    }

    #[test]
    fn rk4_and_euler_close_on_step_platoon() {
        // String-stable parameters: with an amplifying set the two schemes'
        // small per-step differences would themselves get amplified
        // vehicle-by-vehicle, which is a property of the model, not a
        // disagreement between the integrators.
        let lead = step_profile(20.0, 5.0, 0.1);
        let mut scenario = PlatoonScenario::homogeneous(lead, params(0.5, 0.5, 3.2, 8.0), 9);
        let euler = simulate_platoon(&scenario).unwrap();
        scenario.integrator = Integrator::Rk4;
        let rk4 = simulate_platoon(&scenario).unwrap();
        // At the velocity discontinuities the schemes see different local
        // inputs (RK4 samples the half-steps), so the disagreement there is
        // bounded by roughly one step's worth of relative-velocity kick;
        // once the transient is over they settle onto the same equilibrium.
        let mut worst = 0.0f64;
        let mut settled = 0.0f64;
        for (a, b) in euler.vehicles.iter().zip(&rk4.vehicles) {
            let n = a.v.len();
            for (i, (x, y)) in a.v.iter().zip(&b.v).enumerate() {
                let gap = (x - y).abs();
                worst = worst.max(gap);
                if i >= n - 300 {
                    settled = settled.max(gap);
                }
            }
        }
        assert!(worst < 0.3, "max Euler-vs-RK4 velocity gap {worst}");
        assert!(
            settled < 1e-3,
            "settled Euler-vs-RK4 velocity gap {settled}"
        );
    }

    #[test]
    fn sinusoid_linearity_in_amplitude() {
        let p = min_setting();
        let resp = |amp: f64| {
            sinusoid_response(&p, 3, 20.0, amp, 0.5, 20.0, 160.0, 0.05)
                .unwrap()
                .amplitudes_mps
        };
        let a1 = resp(0.5);
        let a2 = resp(1.0);
        for (x, y) in a1.iter().zip(&a2) {
            assert_relative_eq!(2.0 * x, *y, max_relative = 1e-3);
        }
    }

    #[test]
    fn sinusoid_ratio_matches_transfer_gain() {
        let p = max_setting();
        let omega = 0.5;
        let resp = sinusoid_response(&p, 4, 20.0, 0.5, omega, 20.0, 400.0, 0.05).unwrap();
        let gain = crate::stability::gamma_magnitude(&p, omega).unwrap();
        for r in &resp.adjacent_ratios {
            assert_relative_eq!(r.unwrap(), gain, max_relative = 0.02);
        }
    }

    #[test]
    fn sinusoid_zero_amplitude_and_short_duration() {
        let p = min_setting();
        let resp = sinusoid_response(&p, 3, 20.0, 0.0, 0.5, 10.0, 30.0, 0.1).unwrap();
        assert!(resp.amplitudes_mps.iter().all(|&a| a == 0.0));
        for veh in &resp.platoon.vehicles {
            assert!(veh.v.iter().all(|&v| v == 20.0));
        }
        // Less than one period after warmup is rejected.
        assert!(sinusoid_response(&p, 3, 20.0, 1.0, 0.5, 10.0, 10.0, 0.1).is_err());
    }

    #[test]
    fn events_logged_for_negative_states() {
        let p = min_setting();
        let lead = UniformSeries::constant(20.0, 5.0, 0.1).unwrap();
        let mut scenario = PlatoonScenario::homogeneous(lead, p, 1);
        scenario.init = PlatoonInit::Explicit(vec![VehicleState { s: -1.0, v: -0.5 }]);
        let result = simulate_platoon(&scenario).unwrap();
        let kinds: Vec<SimEventKind> = result.vehicles[0].events.iter().map(|e| e.kind).collect();
        assert!(kinds.contains(&SimEventKind::NegativeGap));
        assert!(kinds.contains(&SimEventKind::NegativeVelocity));
        let summary = result.summary();
        assert_eq!(summary.events.len(), result.vehicles[0].events.len());
        assert!(summary.events.iter().all(|e| e.vehicle == 1));
    }

    #[test]
    fn empirical_lead_resamples_and_runs() {
        // A dip profile recorded at 5 Hz, simulated at 10 Hz.
        let recorded = generate(&ProfileSpec::StepSchedule {
            segments: vec![
                Segment::new(22.0, 30.0),
                Segment::new(9.0, 5.0),
                Segment::new(22.0, 60.0),
            ],
            dt: 0.2,
            transition: crate::profiles::Transition::Instantaneous,
        })
        .unwrap();
        let result = empirical_lead_response(&min_setting(), &recorded, 5, 0.1).unwrap();
        assert_eq!(result.vehicles.len(), 5);
        assert_relative_eq!(result.lead.dt(), 0.1, max_relative = 1e-12);
        let summary = result.summary();
        // The dip propagates: every vehicle slows below cruise.
        assert!(summary.min_velocity_mps.iter().all(|&m| m < 22.0));

        let constant = UniformSeries::constant(20.0, 60.0, 0.1).unwrap();
        let flat = empirical_lead_response(&min_setting(), &constant, 3, 0.1).unwrap();
        assert!(flat.summary().peak_to_peak_mps.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn scenario_validation_errors() {
        let lead = UniformSeries::constant(20.0, 10.0, 0.1).unwrap();
        let base = PlatoonScenario::homogeneous(lead, min_setting(), 2);

        let mut s = base.clone();
        s.followers.clear();
        assert!(simulate_platoon(&s).is_err());

        let mut s = base.clone();
        s.duration = Some(0.01);
        assert!(simulate_platoon(&s).is_err());

        let mut s = base.clone();
        s.duration = Some(100.0);
        assert!(simulate_platoon(&s).is_err());

        let mut s = base.clone();
        s.init = PlatoonInit::Explicit(vec![VehicleState { s: 10.0, v: 20.0 }]);
        assert!(simulate_platoon(&s).is_err(), "wrong explicit-init length");

        let mut s = base.clone();
        s.disturbances = Some(vec![UniformSeries::constant(0.0, 10.0, 0.1).unwrap()]);
        assert!(simulate_platoon(&s).is_err(), "wrong disturbance count");

        let mut s = base;
        s.duration = Some(5.0);
        let result = simulate_platoon(&s).unwrap();
        assert_eq!(result.lead.len(), 51);
    }

    #[test]
    fn disturbance_shifts_acceleration() {
        let p = min_setting();
        let lead = UniformSeries::constant(20.0, 30.0, 0.1).unwrap();
        let bump = UniformSeries::new(
            0.0,
            0.1,
            (0..lead.len())
                .map(|i| if i < 50 { 0.5 } else { 0.0 })
                .collect(),
        )
        .unwrap();
        let mut scenario = PlatoonScenario::homogeneous(lead, p, 1);
        scenario.disturbances = Some(vec![bump]);
        let result = simulate_platoon(&scenario).unwrap();
        // Equilibrium plus a positive acceleration offset: the vehicle speeds
        // up during the bump.
        assert_eq!(result.vehicles[0].a[0], 0.5);
        assert!(
            result.vehicles[0]
                .v
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
                > 20.1
        );
    }

    #[test]
    fn csv_output_shape() {
        let lead = UniformSeries::constant(20.0, 1.0, 0.1).unwrap();
        let scenario = PlatoonScenario::homogeneous(lead, min_setting(), 2);
        let result = simulate_platoon(&scenario).unwrap();
        let mut buf = Vec::new();
        result.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,vehicle_index,space_gap_m,velocity_mps,accel_mps2"
        );
        // Lead row with empty space-gap/accel fields.
        assert_eq!(lines.next().unwrap(), "0.0,0,,20.0,");
        assert_eq!(text.lines().count(), 1 + 3 * 11);

        let summary = result.summary();
        let json = serde_json::to_string(&summary).unwrap();
        assert!(json.contains("peak_to_peak_mps"));
    }
}
