//! String-stability analysis of the linearized car-following model.
//!
//! A platoon is string stable when velocity perturbations attenuate from each
//! vehicle to its follower. For the linear model this is captured two
//! equivalent ways:
//!
//! - the scalar criterion `lambda2 < 0`, with
//!   `lambda2 = (f_s/f_v³)·(f_v²/2 − f_Δv·f_v − f_s)`;
//! - the transfer-function magnitude condition `|Γ(jω)| ≤ 1` for all ω, with
//!   `|Γ(jω)|² = (ω²f_Δv² + f_s²) / ((f_s − ω²)² + ω²(f_Δv − f_v)²)`.
//!
//! Setting `|Γ| = 1` gives the closed-form crossover `ω_c² = 2f_s + 2f_Δv·f_v
//! − f_v²`; disturbances below ω_c amplify, above it decay. The stationary
//! point of `|Γ|²` (quadratic in x = ω²) gives the analytic peak
//! `x* = (−f_s² + f_s·sqrt(f_s² + f_Δv²·ω_c²)) / f_Δv²`. The jam distance η
//! enters none of these expressions, so every output here is invariant to it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::par;

/// |λ₂| below this is reported as marginal (and still classified unstable,
/// since the stability condition is strict).
const MARGINAL_EPS: f64 = 1e-9;

/// String-stability criterion; negative means string stable.
///
/// Undefined when `f_v = 0` (i.e. `k1 = 0` or `tau_e = 0`); use the
/// transfer-function route for such parameters.
pub fn lambda2(params: &ModelParams) -> Result<f64> {
    let f_s = params.f_s();
    let f_v = params.f_v();
    let f_dv = params.f_dv();
    if f_v == 0.0 {
        return Err(Error::Singular(format!(
            "lambda2 undefined for f_v = 0 (k1 = {}, tau_e = {})",
            params.k1(),
            params.tau_e()
        )));
    }
    Ok(f_s / f_v.powi(3) * (f_v * f_v / 2.0 - f_dv * f_v - f_s))
}

/// Magnitude of the lead-to-follower velocity transfer function at ω.
pub fn gamma_magnitude(params: &ModelParams, omega: f64) -> Result<f64> {
    if !omega.is_finite() || omega < 0.0 {
        return Err(Error::domain(format!(
            "omega must be non-negative, got {omega}"
        )));
    }
    let f_s = params.f_s();
    let f_v = params.f_v();
    let f_dv = params.f_dv();
    let w2 = omega * omega;
    let num = w2 * f_dv * f_dv + f_s * f_s;
    let den = (f_s - w2) * (f_s - w2) + w2 * (f_dv - f_v) * (f_dv - f_v);
    if den == 0.0 {
        return Err(Error::Singular(format!(
            "transfer function undamped at omega = {omega} for these parameters"
        )));
    }
    Ok((num / den).sqrt())
}

/// The ω > 0 where |Γ(jω)| = 1, from the closed form
/// `ω_c² = 2f_s + 2f_Δv·f_v − f_v²`; `None` when that expression is ≤ 0
/// (string stable: no amplified band).
pub fn crossover_frequency(params: &ModelParams) -> Option<f64> {
    let wc2 = crossover_omega_squared(params);
    if wc2 > 0.0 {
        Some(wc2.sqrt())
    } else {
        None
    }
}

fn crossover_omega_squared(params: &ModelParams) -> f64 {
    let f_s = params.f_s();
    let f_v = params.f_v();
    let f_dv = params.f_dv();
    2.0 * f_s + 2.0 * f_dv * f_v - f_v * f_v
}

/// Analytic peak of the gain curve: the stationary point of |Γ|² as a
/// quadratic in x = ω². Returns `(peak_omega [rad/s], peak_gain [dB])`;
/// `(0, 0)` for string-stable parameters, whose supremum sits at ω = 0.
pub fn peak_gain_analytic(params: &ModelParams) -> Result<(f64, f64)> {
    if params.k1() <= 0.0 {
        return Err(Error::Singular(
            "peak gain requires k1 > 0 (zero spacing gain has no equilibrium pull)".into(),
        ));
    }
    let f_s = params.f_s();
    let f_dv = params.f_dv();
    let wc2 = crossover_omega_squared(params);
    if wc2 <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let a = f_dv * f_dv;
    let b = f_s * f_s;
    // Stationary point of (a·x + b)/denominator: a·x² + 2b·x − b·ω_c² = 0.
    let x_star = if a == 0.0 {
        wc2 / 2.0
    } else {
        (-b + f_s * (b + a * wc2).sqrt()) / a
    };
    let omega = x_star.max(0.0).sqrt();
    let gain = gamma_magnitude(params, omega)?;
    Ok((omega, db(gain)))
}

/// Peak of the gain curve by 2000-point log sweep plus golden-section
/// refinement; agrees with [`peak_gain_analytic`] to high precision and
/// guards it against algebra slips. Returns `(peak_omega, peak_gain_db)`,
/// `(0, 0)` for string-stable parameters.
pub fn peak_gain(params: &ModelParams) -> Result<(f64, f64)> {
    if params.k1() <= 0.0 {
        return Err(Error::Singular(
            "peak gain requires k1 > 0 (zero spacing gain has no equilibrium pull)".into(),
        ));
    }
    const N: usize = 2000;
    let (lo, hi) = (1e-4f64, 1e1f64);
    let step = (hi / lo).ln() / (N - 1) as f64;
    let mut best_i = 0;
    let mut best_g = f64::NEG_INFINITY;
    let mut grid = Vec::with_capacity(N);
    for i in 0..N {
        let w = lo * (step * i as f64).exp();
        let g = gamma_magnitude(params, w)?;
        grid.push(w);
        if g > best_g {
            best_g = g;
            best_i = i;
        }
    }
    if best_g <= 1.0 {
        // |Γ| ≤ 1 everywhere sampled: stable, supremum 1 at ω = 0.
        return Ok((0.0, 0.0));
    }
    // Golden-section refinement on the bracketing interval.
    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid[(best_i + 1).min(N - 1)];
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = gamma_magnitude(params, c)?;
    let mut fd = gamma_magnitude(params, d)?;
    for _ in 0..200 {
        if b - a <= 1e-13 * b.max(1.0) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = gamma_magnitude(params, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = gamma_magnitude(params, d)?;
        }
    }
    let omega = 0.5 * (a + b);
    Ok((omega, db(gamma_magnitude(params, omega)?)))
}

fn db(gain: f64) -> f64 {
    20.0 * gain.log10()
}

/// Log-spaced gain curve over `[omega_min, omega_max]` as
/// `(omega [rad/s], gain [dB])` pairs in increasing frequency order.
pub fn bode_curve(
    params: &ModelParams,
    omega_min: f64,
    omega_max: f64,
    n_points: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(omega_min.is_finite() && omega_max.is_finite())
        || omega_min <= 0.0
        || omega_min >= omega_max
    {
        return Err(Error::domain(format!(
            "need 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::domain(format!(
            "need at least 2 points, got {n_points}"
        )));
    }
    let step = (omega_max / omega_min).ln() / (n_points - 1) as f64;
    let mut curve = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let w = if i == n_points - 1 {
            omega_max // land exactly on the endpoint
        } else {
            omega_min * (step * i as f64).exp()
        };
        curve.push((w, db(gamma_magnitude(params, w)?)));
    }
    Ok(curve)
}

/// Default Bode sampling used by [`analyze`]: 500 log-spaced points over
/// 1e-3..10 rad/s.
pub const DEFAULT_BODE_RANGE: (f64, f64) = (1e-3, 10.0);
pub const DEFAULT_BODE_POINTS: usize = 500;

/// Full frequency-domain characterization of one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub lambda2: f64,
    pub is_string_stable: bool,
    /// |λ₂| < 1e-9: on the stability boundary; classified not string stable
    /// because the criterion is strict.
    pub marginal: bool,
    /// Present iff an amplified band exists (λ₂ > 0).
    pub crossover_omega: Option<f64>,
    pub peak_gain_db: f64,
    pub peak_omega: f64,
    /// `(omega [rad/s], gain [dB])` pairs.
    pub gain_curve: Vec<(f64, f64)>,
}

/// Compute the standard report: λ₂ classification, crossover, analytic peak,
/// and the default Bode curve.
pub fn analyze(params: &ModelParams) -> Result<StabilityReport> {
    let l2 = lambda2(params)?;
    let (peak_omega, peak_gain_db) = peak_gain_analytic(params)?;
    let gain_curve = bode_curve(
        params,
        DEFAULT_BODE_RANGE.0,
        DEFAULT_BODE_RANGE.1,
        DEFAULT_BODE_POINTS,
    )?;
    Ok(StabilityReport {
        lambda2: l2,
        is_string_stable: l2 < 0.0,
        marginal: l2.abs() < MARGINAL_EPS,
        crossover_omega: crossover_frequency(params),
        peak_gain_db,
        peak_omega,
        gain_curve,
    })
}

/// One grid cell of a parameter sweep. `lambda2`/`stable` are `None` where
/// the criterion is undefined (k1 = 0 or tau_e = 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k1: f64,
    pub k2: f64,
    pub tau_e: f64,
    pub lambda2: Option<f64>,
    pub stable: Option<bool>,
}

fn sweep_axis(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    let step = (range.1 - range.0) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                range.1
            } else {
                range.0 + i as f64 * step
            }
        })
        .collect()
}

fn sweep_cells(
    k1_range: (f64, f64),
    k2_range: (f64, f64),
    tau_e_values: &[f64],
    resolution: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    for (name, (lo, hi)) in [("k1", k1_range), ("k2", k2_range)] {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < lo {
            return Err(Error::domain(format!(
                "{name} range must satisfy 0 <= lo <= hi, got [{lo}, {hi}]"
            )));
        }
    }
    if tau_e_values.is_empty() {
        return Err(Error::domain("tau_e_values must be non-empty"));
    }
    if tau_e_values.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::domain(
            "tau_e values must be finite and non-negative",
        ));
    }
    if resolution == 0 {
        return Err(Error::domain("grid resolution must be at least 1"));
    }
    let k1s = sweep_axis(k1_range, resolution);
    let k2s = sweep_axis(k2_range, resolution);
    let mut cells = Vec::with_capacity(tau_e_values.len() * k1s.len() * k2s.len());
    for &tau_e in tau_e_values {
        for &k1 in &k1s {
            for &k2 in &k2s {
                cells.push((k1, k2, tau_e));
            }
        }
    }
    Ok(cells)
}

fn eval_cell((k1, k2, tau_e): (f64, f64, f64)) -> SweepCell {
    let l2 = ModelParams::new(k1, k2, tau_e, 0.0)
        .ok()
        .and_then(|p| lambda2(&p).ok());
    SweepCell {
        k1,
        k2,
        tau_e,
        lambda2: l2,
        stable: l2.map(|v| v < 0.0),
    }
}

/// Evaluate λ₂ on the Cartesian grid `k1 × k2` (each axis sampled at
/// `resolution` points) for every τ_e value. Cell order is τ_e-major, then
/// k1, then k2, identical regardless of execution strategy. Runs on the
/// rayon pool when the `parallel` feature is enabled.
pub fn stability_sweep(
    k1_range: (f64, f64),
    k2_range: (f64, f64),
    tau_e_values: &[f64],
    resolution: usize,
) -> Result<Vec<SweepCell>> {
    let cells = sweep_cells(k1_range, k2_range, tau_e_values, resolution)?;
    Ok(par::map_collect(cells, eval_cell))
}

/// Sequential twin of [`stability_sweep`]; produces identical output.
pub fn stability_sweep_serial(
    k1_range: (f64, f64),
    k2_range: (f64, f64),
    tau_e_values: &[f64],
    resolution: usize,
) -> Result<Vec<SweepCell>> {
    let cells = sweep_cells(k1_range, k2_range, tau_e_values, resolution)?;
    Ok(par::map_collect_serial(cells, eval_cell))
}

/// Emit sweep cells as `k1,k2,tau_e,lambda2,stable` CSV; undefined cells get
/// empty `lambda2`/`stable` fields.
pub fn write_sweep_csv<W: std::io::Write>(cells: &[SweepCell], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k1", "k2", "tau_e", "lambda2", "stable"])?;
    for c in cells {
        w.serialize((c.k1, c.k2, c.tau_e, c.lambda2, c.stable))?;
    }
    w.flush()?;
    Ok(())
}

/// Emit a gain curve as `omega_rad_s,gain_db` CSV.
pub fn write_gain_csv<W: std::io::Write>(curve: &[(f64, f64)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["omega_rad_s", "gain_db"])?;
    for &(omega, gain) in curve {
        w.serialize((omega, gain))?;
    }
    w.flush()?;
    Ok(())
}
