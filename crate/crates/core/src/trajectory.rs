//! GPS log ingestion and paired-trajectory construction.
//!
//! Raw per-vehicle GPS logs (time, latitude, longitude, velocity) are paired
//! into a [`Trajectory`]: a uniform grid of lead velocity, follower velocity,
//! and space-gap. Distances come from the Haversine formula on a sphere of
//! radius 6,371,000 m; the space-gap subtracts the lead vehicle length and
//! any antenna-to-bumper offset from the antenna-to-antenna distance.

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius [m] used by [`haversine`].
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// One GPS fix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsSample {
    pub t_s: f64,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub vel_mps: f64,
}

/// A single vehicle's GPS log: strictly increasing timestamps, valid
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpsLog {
    samples: Vec<GpsSample>,
    nominal_rate_hz: f64,
}

fn check_coords(lat: f64, lon: f64) -> Result<()> {
    if !(lat.is_finite() && lon.is_finite()) {
        return Err(Error::NonFinite("coordinate"));
    }
    if lat.abs() > 90.0 || lon.abs() > 180.0 {
        return Err(Error::domain(format!(
            "coordinates ({lat}, {lon}) out of range"
        )));
    }
    Ok(())
}

impl GpsLog {
    pub fn new(samples: Vec<GpsSample>, nominal_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::format("GPS log has no samples"));
        }
        if !nominal_rate_hz.is_finite() || nominal_rate_hz <= 0.0 {
            return Err(Error::domain(format!(
                "nominal rate must be positive, got {nominal_rate_hz}"
            )));
        }
        for s in &samples {
            if !(s.t_s.is_finite() && s.vel_mps.is_finite()) {
                return Err(Error::NonFinite("GPS sample"));
            }
            check_coords(s.lat_deg, s.lon_deg)?;
        }
        for pair in samples.windows(2) {
            if pair[1].t_s <= pair[0].t_s {
                return Err(Error::format(format!(
                    "timestamps must be strictly increasing ({} then {})",
                    pair[0].t_s, pair[1].t_s
                )));
            }
        }
        Ok(GpsLog {
            samples,
            nominal_rate_hz,
        })
    }

    pub fn samples(&self) -> &[GpsSample] {
        &self.samples
    }

    pub fn nominal_rate_hz(&self) -> f64 {
        self.nominal_rate_hz
    }

    /// First and last timestamps.
    pub fn span(&self) -> (f64, f64) {
        (
            self.samples[0].t_s,
            self.samples[self.samples.len() - 1].t_s,
        )
    }

    /// Linear interpolation of position and velocity at time `t` (clamped to
    /// the log's span). Exact at sample timestamps.
    fn interp(&self, t: f64) -> GpsSample {
        let samples = &self.samples;
        if t <= samples[0].t_s {
            return samples[0];
        }
        let last = samples.len() - 1;
        if t >= samples[last].t_s {
            return samples[last];
        }
        // First sample with timestamp > t; its predecessor brackets t.
        let hi = samples.partition_point(|s| s.t_s <= t);
        let (a, b) = (&samples[hi - 1], &samples[hi]);
        let u = (t - a.t_s) / (b.t_s - a.t_s);
        if u <= 0.0 {
            return *a;
        }
        GpsSample {
            t_s: t,
            lat_deg: a.lat_deg + u * (b.lat_deg - a.lat_deg),
            lon_deg: a.lon_deg + u * (b.lon_deg - a.lon_deg),
            vel_mps: a.vel_mps + u * (b.vel_mps - a.vel_mps),
        }
    }

    /// Consecutive-sample gaps larger than `threshold` seconds that intersect
    /// `[from, to]`, as (start, end) timestamp pairs.
    fn gaps_within(&self, from: f64, to: f64, threshold: f64) -> Vec<(f64, f64)> {
        self.samples
            .windows(2)
            .filter(|p| p[1].t_s - p[0].t_s > threshold && p[1].t_s > from && p[0].t_s < to)
            .map(|p| (p[0].t_s, p[1].t_s))
            .collect()
    }

    /// Parse `t_s,lat_deg,lon_deg,vel_mps` CSV (header required).
    pub fn read_csv<R: io::Read>(reader: R, nominal_rate_hz: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let expected = ["t_s", "lat_deg", "lon_deg", "vel_mps"];
        if headers.iter().take(4).ne(expected) {
            return Err(Error::format(format!(
                "expected GPS CSV header `t_s,lat_deg,lon_deg,vel_mps`, found {headers:?}"
            )));
        }
        let mut samples = Vec::new();
        for record in r.deserialize() {
            let (t_s, lat_deg, lon_deg, vel_mps): (f64, f64, f64, f64) = record?;
            samples.push(GpsSample {
                t_s,
                lat_deg,
                lon_deg,
                vel_mps,
            });
        }
        GpsLog::new(samples, nominal_rate_hz)
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t_s", "lat_deg", "lon_deg", "vel_mps"])?;
        for s in &self.samples {
            w.serialize((s.t_s, s.lat_deg, s.lon_deg, s.vel_mps))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Great-circle distance [m] between two (latitude, longitude) points in
/// degrees, on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> Result<f64> {
    check_coords(lat1, lon1)?;
    check_coords(lat2, lon2)?;
    let phi1 = lat1.to_radians();
    let phi2 = lat2.to_radians();
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    Ok(2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin())
}

/// Free-form trajectory annotations carried alongside the series.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    /// Profile label (e.g. "F").
    pub label: Option<String>,
    /// ACC following setting the data was recorded under.
    pub setting: Option<String>,
    pub source_lead: Option<String>,
    pub source_follow: Option<String>,
    /// Data-quality notes (e.g. implausible negative space-gaps).
    pub warnings: Vec<String>,
}

/// Uniformly sampled lead velocity, follower velocity, and space-gap —
/// the measured quantities the model is calibrated against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    v_lead: Vec<f64>,
    v_follow: Vec<f64>,
    space_gap: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(
        t0: f64,
        dt: f64,
        v_lead: Vec<f64>,
        v_follow: Vec<f64>,
        space_gap: Vec<f64>,
        meta: TrajectoryMeta,
    ) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::NonFinite("trajectory start time"));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::domain(format!(
                "trajectory dt must be positive, got {dt}"
            )));
        }
        if v_lead.is_empty() || v_lead.len() != v_follow.len() || v_lead.len() != space_gap.len() {
            return Err(Error::format(format!(
                "trajectory channels must be equal-length and non-empty (got {}, {}, {})",
                v_lead.len(),
                v_follow.len(),
                space_gap.len()
            )));
        }
        if v_lead
            .iter()
            .chain(&v_follow)
            .chain(&space_gap)
            .any(|x| !x.is_finite())
        {
            return Err(Error::NonFinite("trajectory sample"));
        }
        Ok(Trajectory {
            t0,
            dt,
            v_lead,
            v_follow,
            space_gap,
            meta,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.v_lead.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_lead.is_empty()
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn v_lead(&self) -> &[f64] {
        &self.v_lead
    }

    pub fn v_follow(&self) -> &[f64] {
        &self.v_follow
    }

    pub fn space_gap(&self) -> &[f64] {
        &self.space_gap
    }

    /// Parse `t_s,v_lead_mps,v_follow_mps,space_gap_m` CSV (header required,
    /// uniform timestamps).
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let expected = ["t_s", "v_lead_mps", "v_follow_mps", "space_gap_m"];
        if headers.iter().take(4).ne(expected) {
            return Err(Error::format(format!(
                "expected trajectory CSV header `t_s,v_lead_mps,v_follow_mps,space_gap_m`, found {headers:?}"
            )));
        }
        let mut times = Vec::new();
        let (mut vl, mut vf, mut sg) = (Vec::new(), Vec::new(), Vec::new());
        for record in r.deserialize() {
            let (t, a, b, c): (f64, f64, f64, f64) = record?;
            times.push(t);
            vl.push(a);
            vf.push(b);
            sg.push(c);
        }
        // Reuse the uniformity validation from UniformSeries.
        let grid = crate::series::UniformSeries::from_times(&times, vec![0.0; times.len()])?;
        Trajectory::new(grid.t0(), grid.dt(), vl, vf, sg, TrajectoryMeta::default())
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t_s", "v_lead_mps", "v_follow_mps", "space_gap_m"])?;
        for i in 0..self.len() {
            w.serialize((
                self.time_at(i),
                self.v_lead[i],
                self.v_follow[i],
                self.space_gap[i],
            ))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Options for [`pair_logs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOptions {
    /// Output grid step [s].
    pub dt: f64,
    /// Lead vehicle length [m], subtracted from the antenna distance.
    pub lead_length_m: f64,
    /// Total antenna-to-bumper correction [m], also subtracted. The default
    /// is 0 because mounting geometry varies; supply the measured value.
    pub antenna_offset_m: f64,
    /// Largest tolerated spacing between consecutive fixes [s].
    pub max_gap_s: f64,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions {
            dt: 0.1,
            lead_length_m: 0.0,
            antenna_offset_m: 0.0,
            max_gap_s: 1.0,
        }
    }
}

fn overlap_window(a: &GpsLog, b: &GpsLog) -> Result<(f64, f64)> {
    let (a0, a1) = a.span();
    let (b0, b1) = b.span();
    let from = a0.max(b0);
    let to = a1.min(b1);
    if from >= to {
        return Err(Error::NoOverlap(format!(
            "spans [{a0}, {a1}] and [{b0}, {b1}]"
        )));
    }
    Ok((from, to))
}

fn check_gaps(a: &GpsLog, b: &GpsLog, from: f64, to: f64, threshold: f64) -> Result<()> {
    let mut intervals = a.gaps_within(from, to, threshold);
    intervals.extend(b.gaps_within(from, to, threshold));
    if intervals.is_empty() {
        Ok(())
    } else {
        intervals.sort_by(|x, y| x.partial_cmp(y).expect("finite timestamps"));
        Err(Error::SamplingGaps {
            threshold,
            intervals,
        })
    }
}

/// Pair a lead and a follower GPS log into a trajectory: clip to the common
/// time window, interpolate both logs onto a uniform `dt` grid, and convert
/// antenna distance to space-gap. Negative space-gaps are kept (the series
/// must stay faithful) but noted in `meta.warnings`.
pub fn pair_logs(lead: &GpsLog, follow: &GpsLog, options: &PairOptions) -> Result<Trajectory> {
    if !options.dt.is_finite() || options.dt <= 0.0 {
        return Err(Error::domain(format!(
            "pairing dt must be positive, got {}",
            options.dt
        )));
    }
    let (from, to) = overlap_window(lead, follow)?;
    check_gaps(lead, follow, from, to, options.max_gap_s)?;
    let n = ((to - from) / options.dt + 1e-9).floor() as usize + 1;
    let mut v_lead = Vec::with_capacity(n);
    let mut v_follow = Vec::with_capacity(n);
    let mut space_gap = Vec::with_capacity(n);
    let mut negative = 0usize;
    for i in 0..n {
        let t = from + i as f64 * options.dt;
        let l = lead.interp(t);
        let f = follow.interp(t);
        let antenna = haversine(l.lat_deg, l.lon_deg, f.lat_deg, f.lon_deg)?;
        let gap = antenna - options.lead_length_m - options.antenna_offset_m;
        if gap < 0.0 {
            negative += 1;
        }
        v_lead.push(l.vel_mps);
        v_follow.push(f.vel_mps);
        space_gap.push(gap);
    }
    let mut meta = TrajectoryMeta::default();
    if negative > 0 {
        meta.warnings.push(format!(
            "{negative} of {n} samples have a negative space-gap; check lead length and antenna offsets"
        ));
    }
    Trajectory::new(from, options.dt, v_lead, v_follow, space_gap, meta)
}

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges, ascending.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn build(values: &[f64], bins: usize) -> Histogram {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            return Histogram {
                edges: vec![lo, hi],
                counts: vec![values.len() as u64],
            };
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let idx = (((v - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Histogram { edges, counts }
    }
}

/// Statistics from two co-located (or fixed-separation) GPS sensors, used to
/// validate position and velocity accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColocatedReport {
    pub n_samples: usize,
    /// Mean measured antenna-to-antenna distance [m].
    pub mean_separation_m: f64,
    /// Mean of (measured separation − true separation) [m].
    pub mean_position_error_m: f64,
    pub mean_abs_velocity_diff_mps: f64,
    pub position_error_hist: Histogram,
    pub velocity_diff_hist: Histogram,
}

/// Compare two logs from sensors a known distance apart: separation and
/// velocity-difference statistics plus their histograms (20 bins).
pub fn colocated_stats(
    log_a: &GpsLog,
    log_b: &GpsLog,
    true_separation_m: f64,
) -> Result<ColocatedReport> {
    if !true_separation_m.is_finite() || true_separation_m < 0.0 {
        return Err(Error::domain(format!(
            "true separation must be non-negative, got {true_separation_m}"
        )));
    }
    let (from, to) = overlap_window(log_a, log_b)?;
    check_gaps(log_a, log_b, from, to, 1.0)?;
    let mut separations = Vec::new();
    let mut vel_diffs = Vec::new();
    for s in log_a.samples() {
        if s.t_s < from || s.t_s > to {
            continue;
        }
        let other = log_b.interp(s.t_s);
        separations.push(haversine(
            s.lat_deg,
            s.lon_deg,
            other.lat_deg,
            other.lon_deg,
        )?);
        vel_diffs.push((s.vel_mps - other.vel_mps).abs());
    }
    if separations.is_empty() {
        return Err(Error::NoOverlap(
            "no samples inside the common window".into(),
        ));
    }
    let n = separations.len();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let position_errors: Vec<f64> = separations.iter().map(|s| s - true_separation_m).collect();
    Ok(ColocatedReport {
        n_samples: n,
        mean_separation_m: mean(&separations),
        mean_position_error_m: mean(&position_errors),
        mean_abs_velocity_diff_mps: mean(&vel_diffs),
        position_error_hist: Histogram::build(&position_errors, 20),
        velocity_diff_hist: Histogram::build(&vel_diffs, 20),
    })
}
