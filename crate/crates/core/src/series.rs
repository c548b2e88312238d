//! Uniformly sampled scalar time series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar signal sampled at `t0 + i*dt` for `i = 0..len`.
///
/// Used for lead-velocity profiles, per-vehicle simulation outputs, and
/// disturbance inputs. Construction validates finiteness and `dt > 0`;
/// downstream code can therefore index freely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl UniformSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::NonFinite("series start time"));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::domain(format!(
                "series dt must be positive, got {dt}"
            )));
        }
        if values.is_empty() {
            return Err(Error::format("series must contain at least one sample"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("series value"));
        }
        Ok(UniformSeries { t0, dt, values })
    }

    /// Build from explicit timestamps, validating that they are uniform.
    ///
    /// Tolerates per-sample jitter up to `1e-6 + 1e-9*|t|` seconds against the
    /// implied grid; anything larger (e.g. a dropped sample) is a format error.
    pub fn from_times(times: &[f64], values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::format(format!(
                "times ({}) and values ({}) differ in length",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            let t0 = *times.first().ok_or_else(|| Error::format("empty series"))?;
            // A single sample has no resolvable dt; pick 1 s by convention.
            return UniformSeries::new(t0, 1.0, values);
        }
        let t0 = times[0];
        let dt = times[1] - times[0];
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::format(format!(
                "timestamps must be strictly increasing (first step {dt})"
            )));
        }
        for (i, &t) in times.iter().enumerate() {
            let expected = t0 + i as f64 * dt;
            if (t - expected).abs() > 1e-6 + 1e-9 * t.abs() {
                return Err(Error::format(format!(
                    "non-uniform sampling at index {i}: t = {t}, expected {expected} (dt = {dt})"
                )));
            }
        }
        UniformSeries::new(t0, dt, values)
    }

    /// Constant-valued series spanning `duration` seconds (inclusive of both
    /// endpoints), i.e. `floor(duration/dt) + 1` samples.
    pub fn constant(value: f64, duration: f64, dt: f64) -> Result<Self> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(Error::domain(format!(
                "duration must be non-negative, got {duration}"
            )));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::domain(format!(
                "series dt must be positive, got {dt}"
            )));
        }
        let n = (duration / dt + 1e-9).floor() as usize + 1;
        UniformSeries::new(0.0, dt, vec![value; n])
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Span from the first to the last sample.
    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    /// First `n` samples (at least one, at most all) as a new series.
    pub fn prefix(&self, n: usize) -> UniformSeries {
        let n = n.clamp(1, self.len());
        UniformSeries {
            t0: self.t0,
            dt: self.dt,
            values: self.values[..n].to_vec(),
        }
    }

    /// Linear interpolation at time `t`, clamped to the series span.
    ///
    /// Exact (bitwise) at grid points: the blend weight is 0 there, so the
    /// stored sample is returned unchanged.
    pub fn interp(&self, t: f64) -> f64 {
        if t <= self.t0 {
            return self.values[0];
        }
        let last = self.len() - 1;
        let end = self.time_at(last);
        if t >= end {
            return self.values[last];
        }
        let pos = (t - self.t0) / self.dt;
        let i = (pos.floor() as usize).min(last - 1);
        let u = (t - self.time_at(i)) / self.dt;
        if u <= 0.0 {
            self.values[i]
        } else {
            self.values[i] + u * (self.values[i + 1] - self.values[i])
        }
    }

    /// Resample onto a new uniform grid with step `dt` over the same span,
    /// by linear interpolation. Identity when `dt` equals the current step.
    pub fn resample(&self, dt: f64) -> Result<UniformSeries> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::domain(format!(
                "resample dt must be positive, got {dt}"
            )));
        }
        if dt == self.dt {
            return Ok(self.clone());
        }
        let n = (self.duration() / dt + 1e-9).floor() as usize + 1;
        let values = (0..n)
            .map(|i| self.interp(self.t0 + i as f64 * dt))
            .collect();
        UniformSeries::new(self.t0, dt, values)
    }

    /// Max minus min over all samples.
    pub fn peak_to_peak(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }
}
