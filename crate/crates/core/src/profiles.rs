//! Synthetic lead-vehicle velocity profiles.
//!
//! Nine builtin test profiles (A–I: step schedules, two-level oscillations,
//! and dip sequences) plus parametric step, sinusoid, and constant profiles.
//! All velocities are stored in m/s; the builtin profiles are specified in
//! mph and converted exactly at construction via [`MPH_TO_MPS`].

use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MPH_TO_MPS;
use crate::series::UniformSeries;

/// How the lead vehicle moves between held velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Transition {
    /// Idealized step: the new velocity applies from the step instant on.
    #[default]
    Instantaneous,
    /// Linear ramp at a fixed acceleration magnitude [m/s²].
    Ramped { accel_mps2: f64 },
}

/// One held velocity in a step schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub velocity_mps: f64,
    pub hold_s: f64,
}

impl Segment {
    pub fn new(velocity_mps: f64, hold_s: f64) -> Self {
        Segment {
            velocity_mps,
            hold_s,
        }
    }
}

/// A parametric lead-velocity profile, sampled by [`generate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    /// Fixed velocity held for a duration.
    Constant {
        velocity_mps: f64,
        duration_s: f64,
        dt: f64,
    },
    /// Arbitrary sequence of held velocities.
    StepSchedule {
        segments: Vec<Segment>,
        dt: f64,
        #[serde(default)]
        transition: Transition,
    },
    /// Alternation between two velocities, starting high; one cycle is a
    /// high hold followed by a low hold.
    Oscillatory {
        high_mps: f64,
        low_mps: f64,
        hold_s: f64,
        cycles: usize,
        dt: f64,
        #[serde(default)]
        transition: Transition,
    },
    /// Cruise punctuated by brief slowdowns: hold `cruise_mps`, then for each
    /// entry of `dip_velocities_mps` drop to it for `dip_hold_s` and recover
    /// to cruise for `recovery_hold_s`.
    Dip {
        cruise_mps: f64,
        initial_hold_s: f64,
        dip_velocities_mps: Vec<f64>,
        dip_hold_s: f64,
        recovery_hold_s: f64,
        dt: f64,
        #[serde(default)]
        transition: Transition,
    },
    /// Constant `v_star_mps` during the warmup, then
    /// `v_star + amplitude·sin(ω(t − warmup))` for the remaining duration.
    Sinusoid {
        v_star_mps: f64,
        amplitude_mps: f64,
        omega_rad_s: f64,
        warmup_s: f64,
        duration_s: f64,
        dt: f64,
    },
}

fn check_dt(dt: f64) -> Result<()> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::domain(format!(
            "profile dt must be positive, got {dt}"
        )));
    }
    Ok(())
}

fn check_velocity(v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::domain(format!(
            "profile velocity must be non-negative, got {v}"
        )));
    }
    Ok(())
}

fn check_hold(h: f64) -> Result<()> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::domain(format!(
            "profile hold duration must be positive, got {h}"
        )));
    }
    Ok(())
}

fn check_transition(t: &Transition) -> Result<()> {
    if let Transition::Ramped { accel_mps2 } = t {
        if !accel_mps2.is_finite() || *accel_mps2 <= 0.0 {
            return Err(Error::domain(format!(
                "ramp acceleration must be positive, got {accel_mps2}"
            )));
        }
    }
    Ok(())
}

impl ProfileSpec {
    fn validate(&self) -> Result<()> {
        match self {
            ProfileSpec::Constant {
                velocity_mps,
                duration_s,
                dt,
            } => {
                check_velocity(*velocity_mps)?;
                check_hold(*duration_s)?;
                check_dt(*dt)
            }
            ProfileSpec::StepSchedule {
                segments,
                dt,
                transition,
            } => {
                if segments.is_empty() {
                    return Err(Error::domain("step schedule needs at least one segment"));
                }
                for s in segments {
                    check_velocity(s.velocity_mps)?;
                    check_hold(s.hold_s)?;
                }
                check_transition(transition)?;
                check_dt(*dt)
            }
            ProfileSpec::Oscillatory {
                high_mps,
                low_mps,
                hold_s,
                cycles,
                dt,
                transition,
            } => {
                check_velocity(*high_mps)?;
                check_velocity(*low_mps)?;
                check_hold(*hold_s)?;
                if *cycles == 0 {
                    return Err(Error::domain(
                        "oscillatory profile needs at least one cycle",
                    ));
                }
                check_transition(transition)?;
                check_dt(*dt)
            }
            ProfileSpec::Dip {
                cruise_mps,
                initial_hold_s,
                dip_velocities_mps,
                dip_hold_s,
                recovery_hold_s,
                dt,
                transition,
            } => {
                check_velocity(*cruise_mps)?;
                check_hold(*initial_hold_s)?;
                check_hold(*dip_hold_s)?;
                check_hold(*recovery_hold_s)?;
                if dip_velocities_mps.is_empty() {
                    return Err(Error::domain("dip profile needs at least one dip"));
                }
                for &v in dip_velocities_mps {
                    check_velocity(v)?;
                    if v > *cruise_mps {
                        return Err(Error::domain(format!(
                            "dip velocity {v} exceeds cruise velocity {cruise_mps}"
                        )));
                    }
                }
                check_transition(transition)?;
                check_dt(*dt)
            }
            ProfileSpec::Sinusoid {
                v_star_mps,
                amplitude_mps,
                omega_rad_s,
                warmup_s,
                duration_s,
                dt,
            } => {
                check_velocity(*v_star_mps)?;
                if !amplitude_mps.is_finite() || *amplitude_mps < 0.0 || amplitude_mps > v_star_mps
                {
                    return Err(Error::domain(format!(
                        "sinusoid amplitude must lie in [0, v_star], got {amplitude_mps}"
                    )));
                }
                if !omega_rad_s.is_finite() || *omega_rad_s <= 0.0 {
                    return Err(Error::domain(format!(
                        "sinusoid omega must be positive, got {omega_rad_s}"
                    )));
                }
                if !warmup_s.is_finite() || *warmup_s < 0.0 {
                    return Err(Error::domain(format!(
                        "sinusoid warmup must be non-negative, got {warmup_s}"
                    )));
                }
                check_hold(*duration_s)?;
                check_dt(*dt)
            }
        }
    }

    /// Segment-list form of the non-sinusoid kinds.
    fn segments(&self) -> Option<(Vec<Segment>, Transition)> {
        match self {
            ProfileSpec::Constant {
                velocity_mps,
                duration_s,
                ..
            } => Some((
                vec![Segment::new(*velocity_mps, *duration_s)],
                Transition::Instantaneous,
            )),
            ProfileSpec::StepSchedule {
                segments,
                transition,
                ..
            } => Some((segments.clone(), *transition)),
            ProfileSpec::Oscillatory {
                high_mps,
                low_mps,
                hold_s,
                cycles,
                transition,
                ..
            } => {
                let mut segs = Vec::with_capacity(2 * cycles);
                for _ in 0..*cycles {
                    segs.push(Segment::new(*high_mps, *hold_s));
                    segs.push(Segment::new(*low_mps, *hold_s));
                }
                Some((segs, *transition))
            }
            ProfileSpec::Dip {
                cruise_mps,
                initial_hold_s,
                dip_velocities_mps,
                dip_hold_s,
                recovery_hold_s,
                transition,
                ..
            } => {
                let mut segs = vec![Segment::new(*cruise_mps, *initial_hold_s)];
                for &v in dip_velocities_mps {
                    segs.push(Segment::new(v, *dip_hold_s));
                    segs.push(Segment::new(*cruise_mps, *recovery_hold_s));
                }
                Some((segs, *transition))
            }
            ProfileSpec::Sinusoid { .. } => None,
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            ProfileSpec::Constant { dt, .. }
            | ProfileSpec::StepSchedule { dt, .. }
            | ProfileSpec::Oscillatory { dt, .. }
            | ProfileSpec::Dip { dt, .. }
            | ProfileSpec::Sinusoid { dt, .. } => *dt,
        }
    }
}

/// Number of samples covering `[0, total]` at step `dt`, robust to `total/dt`
/// landing one rounding error below an integer.
fn sample_count(total: f64, dt: f64) -> usize {
    (total / dt + 1e-9).floor() as usize + 1
}

fn sample_piecewise_constant(segments: &[Segment], dt: f64) -> Result<UniformSeries> {
    let total: f64 = segments.iter().map(|s| s.hold_s).sum();
    let mut starts = Vec::with_capacity(segments.len());
    let mut acc = 0.0;
    for s in segments {
        starts.push(acc);
        acc += s.hold_s;
    }
    let n = sample_count(total, dt);
    let mut values = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let t = i as f64 * dt;
        // A sample on a boundary takes the incoming segment's velocity.
        while j + 1 < segments.len() && t >= starts[j + 1] - 1e-9 {
            j += 1;
        }
        values.push(segments[j].velocity_mps);
    }
    UniformSeries::new(0.0, dt, values)
}

fn sample_piecewise_linear(segments: &[Segment], accel: f64, dt: f64) -> Result<UniformSeries> {
    // Knots (t, v) of the hold/ramp polyline; ramps are inserted between
    // holds, extending the total duration.
    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(2 * segments.len());
    let mut t = 0.0;
    for (i, seg) in segments.iter().enumerate() {
        if i == 0 {
            knots.push((0.0, seg.velocity_mps));
        } else {
            let dv = seg.velocity_mps - segments[i - 1].velocity_mps;
            if dv != 0.0 {
                t += dv.abs() / accel;
                knots.push((t, seg.velocity_mps));
            }
        }
        t += seg.hold_s;
        knots.push((t, seg.velocity_mps));
    }
    let n = sample_count(t, dt);
    let mut values = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let ti = i as f64 * dt;
        while j + 2 < knots.len() && ti >= knots[j + 1].0 {
            j += 1;
        }
        let (ta, va) = knots[j];
        let (tb, vb) = knots[j + 1];
        let v = if ti <= ta {
            va
        } else if ti >= tb {
            vb
        } else {
            va + (ti - ta) / (tb - ta) * (vb - va)
        };
        values.push(v);
    }
    UniformSeries::new(0.0, dt, values)
}

/// Sample a profile spec as a uniform velocity series starting at t = 0.
pub fn generate(spec: &ProfileSpec) -> Result<UniformSeries> {
    spec.validate()?;
    if let Some((segments, transition)) = spec.segments() {
        return match transition {
            Transition::Instantaneous => sample_piecewise_constant(&segments, spec.dt()),
            Transition::Ramped { accel_mps2 } => {
                sample_piecewise_linear(&segments, accel_mps2, spec.dt())
            }
        };
    }
    let ProfileSpec::Sinusoid {
        v_star_mps,
        amplitude_mps,
        omega_rad_s,
        warmup_s,
        duration_s,
        dt,
    } = *spec
    else {
        unreachable!("non-sinusoid kinds handled via segments()");
    };
    let total = warmup_s + duration_s;
    let n = sample_count(total, dt);
    let values = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            if t < warmup_s {
                v_star_mps
            } else {
                v_star_mps + amplitude_mps * (omega_rad_s * (t - warmup_s)).sin()
            }
        })
        .collect();
    UniformSeries::new(0.0, dt, values)
}

/// The nine builtin lead-vehicle test profiles.
///
/// A–C are step schedules (low/medium/high velocity), D–H two-level
/// oscillations, and I a medium-velocity dip sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuiltinProfile {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
}

impl BuiltinProfile {
    pub const ALL: [BuiltinProfile; 9] = [
        BuiltinProfile::A,
        BuiltinProfile::B,
        BuiltinProfile::C,
        BuiltinProfile::D,
        BuiltinProfile::E,
        BuiltinProfile::F,
        BuiltinProfile::G,
        BuiltinProfile::H,
        BuiltinProfile::I,
    ];

    /// Expand to a [`ProfileSpec`]. `cycles` repeats the whole schedule for
    /// the step and dip profiles and sets the number of high/low alternations
    /// for the oscillatory ones.
    pub fn spec(self, dt: f64, cycles: usize) -> Result<ProfileSpec> {
        if cycles == 0 {
            return Err(Error::domain("cycles must be at least 1"));
        }
        let mph = |v: f64| v * MPH_TO_MPS;
        let step_updown = |lo_mph: f64, hi_mph: f64| -> ProfileSpec {
            // lo, lo+5, ..., hi, ..., lo+5, lo — the peak is held once.
            let mut up: Vec<f64> = Vec::new();
            let mut v = lo_mph;
            while v < hi_mph + 0.5 {
                up.push(v);
                v += 5.0;
            }
            let mut schedule = up.clone();
            schedule.extend(up.iter().rev().skip(1));
            let one_cycle: Vec<Segment> = schedule
                .iter()
                .map(|&m| Segment::new(mph(m), 60.0))
                .collect();
            ProfileSpec::StepSchedule {
                segments: one_cycle
                    .iter()
                    .cycle()
                    .take(one_cycle.len() * cycles)
                    .copied()
                    .collect(),
                dt,
                transition: Transition::Instantaneous,
            }
        };
        let oscillation = |high_mph: f64, low_mph: f64| ProfileSpec::Oscillatory {
            high_mps: mph(high_mph),
            low_mps: mph(low_mph),
            hold_s: 30.0,
            cycles,
            dt,
            transition: Transition::Instantaneous,
        };
        Ok(match self {
            BuiltinProfile::A => step_updown(5.0, 30.0),
            BuiltinProfile::B => step_updown(35.0, 55.0),
            BuiltinProfile::C => step_updown(60.0, 70.0),
            BuiltinProfile::D => oscillation(30.0, 20.0),
            BuiltinProfile::E => oscillation(50.0, 45.0),
            BuiltinProfile::F => oscillation(50.0, 40.0),
            BuiltinProfile::G => oscillation(70.0, 65.0),
            BuiltinProfile::H => oscillation(70.0, 60.0),
            BuiltinProfile::I => {
                let dip = ProfileSpec::Dip {
                    cruise_mps: mph(50.0),
                    initial_hold_s: 45.0,
                    dip_velocities_mps: vec![mph(45.0), mph(40.0), mph(35.0), mph(30.0)],
                    dip_hold_s: 5.0,
                    recovery_hold_s: 45.0,
                    dt,
                    transition: Transition::Instantaneous,
                };
                if cycles == 1 {
                    dip
                } else {
                    let (segments, transition) =
                        dip.segments().expect("dip profile has segment form");
                    ProfileSpec::StepSchedule {
                        segments: segments
                            .iter()
                            .cycle()
                            .take(segments.len() * cycles)
                            .copied()
                            .collect(),
                        dt,
                        transition,
                    }
                }
            }
        })
    }

    /// Generate the named profile directly.
    pub fn series(self, dt: f64, cycles: usize) -> Result<UniformSeries> {
        generate(&self.spec(dt, cycles)?)
    }
}

impl fmt::Display for BuiltinProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self {
            BuiltinProfile::A => "A",
            BuiltinProfile::B => "B",
            BuiltinProfile::C => "C",
            BuiltinProfile::D => "D",
            BuiltinProfile::E => "E",
            BuiltinProfile::F => "F",
            BuiltinProfile::G => "G",
            BuiltinProfile::H => "H",
            BuiltinProfile::I => "I",
        };
        f.write_str(letter)
    }
}

impl FromStr for BuiltinProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(BuiltinProfile::A),
            "B" => Ok(BuiltinProfile::B),
            "C" => Ok(BuiltinProfile::C),
            "D" => Ok(BuiltinProfile::D),
            "E" => Ok(BuiltinProfile::E),
            "F" => Ok(BuiltinProfile::F),
            "G" => Ok(BuiltinProfile::G),
            "H" => Ok(BuiltinProfile::H),
            "I" => Ok(BuiltinProfile::I),
            other => Err(Error::domain(format!(
                "unknown profile name {other:?}; valid names are A, B, C, D, E, F, G, H, I"
            ))),
        }
    }
}

/// Emit a velocity series as `t,velocity_mps` CSV with shortest-round-trip
/// float formatting, so parsing it back reproduces the values bit-exactly.
pub fn write_profile_csv<W: io::Write>(series: &UniformSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "velocity_mps"])?;
    for (i, &v) in series.values().iter().enumerate() {
        w.serialize((series.time_at(i), v))?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a `t,velocity_mps` CSV emitted by [`write_profile_csv`] (or any
/// uniformly sampled equivalent).
pub fn read_profile_csv<R: io::Read>(reader: R) -> Result<UniformSeries> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "t" || &headers[1] != "velocity_mps" {
        return Err(Error::format(format!(
            "expected profile CSV header `t,velocity_mps`, found {headers:?}"
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in r.deserialize() {
        let (t, v): (f64, f64) = record?;
        times.push(t);
        values.push(v);
    }
    UniformSeries::from_times(&times, values)
}
