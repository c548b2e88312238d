//! Simulation-based calibration of the model against measured trajectories.
//!
//! The objective is the pooled root-mean-square error between simulated and
//! measured follower velocity over the training portion of each trajectory;
//! the follower is re-simulated from the measured initial state for every
//! candidate parameter vector. Minimization runs a bounded Nelder–Mead
//! simplex from many random starting points (multi-start), which in practice
//! is what makes the search reliable on this objective's plateaus.
//!
//! Parameter vectors are ordered `[k1, k2, tau_e, eta]` throughout.

mod nelder_mead;

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::par;
use crate::trajectory::Trajectory;

use nelder_mead::{minimize, NmOptions, DIM};

/// Box constraints for the search, ordered `[k1, k2, tau_e, eta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub lower: [f64; 4],
    pub upper: [f64; 4],
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds {
            lower: [0.001, 0.001, 0.1, 0.0],
            upper: [2.0, 2.0, 5.0, 25.0],
        }
    }
}

impl ParamBounds {
    pub fn validate(&self) -> Result<()> {
        for i in 0..4 {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::NonFinite("parameter bound"));
            }
            if lo < 0.0 || hi < lo {
                return Err(Error::domain(format!(
                    "bounds for parameter {i} must satisfy 0 <= lower <= upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64; 4]) -> bool {
        (0..4).all(|i| self.lower[i] <= x[i] && x[i] <= self.upper[i])
    }
}

/// Calibration settings. All fields have defaults, so a JSON config may
/// specify only the ones it overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    /// Integration and data grid step [s]; trajectories must be sampled at
    /// this rate.
    pub dt: f64,
    pub bounds: ParamBounds,
    /// Number of random Nelder–Mead starting points.
    pub n_starts: usize,
    /// Seed for the starting-point draw; fixing it makes the whole
    /// calibration reproducible.
    pub seed: u64,
    /// Leading fraction of each trajectory used for fitting; the remainder
    /// is held out for the error table.
    pub split: f64,
    /// Iteration cap per Nelder–Mead run.
    pub max_iterations: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            dt: 0.1,
            bounds: ParamBounds::default(),
            n_starts: 100,
            seed: 0,
            split: 0.5,
            max_iterations: 2000,
        }
    }
}

/// A validated set of trajectories plus the settings to fit them with.
#[derive(Debug, Clone)]
pub struct CalibrationProblem {
    trajectories: Vec<Trajectory>,
    config: CalibrationConfig,
}

impl CalibrationProblem {
    pub fn new(trajectories: Vec<Trajectory>, config: CalibrationConfig) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::format("calibration needs at least one trajectory"));
        }
        if !config.dt.is_finite() || config.dt <= 0.0 {
            return Err(Error::domain(format!(
                "dt must be positive, got {}",
                config.dt
            )));
        }
        if !(config.split > 0.0 && config.split <= 1.0) {
            return Err(Error::domain(format!(
                "split must lie in (0, 1], got {}",
                config.split
            )));
        }
        if config.n_starts == 0 {
            return Err(Error::domain("n_starts must be at least 1"));
        }
        config.bounds.validate()?;
        for (i, traj) in trajectories.iter().enumerate() {
            if (traj.dt() - config.dt).abs() > 1e-12 * config.dt {
                return Err(Error::format(format!(
                    "trajectory {i} is sampled at dt = {} but the calibration grid is dt = {}; resample upstream",
                    traj.dt(),
                    config.dt
                )));
            }
            if traj.len() < 2 {
                return Err(Error::format(format!(
                    "trajectory {i} has {} samples; need at least 2",
                    traj.len()
                )));
            }
        }
        Ok(CalibrationProblem {
            trajectories,
            config,
        })
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn config(&self) -> &CalibrationConfig {
        &self.config
    }

    /// Samples of trajectory `i` that belong to the training portion.
    pub fn train_len(&self, i: usize) -> usize {
        let n = self.trajectories[i].len();
        let raw = (self.config.split * n as f64).round() as usize;
        raw.clamp(1, n)
    }
}

/// Root-mean-square difference between two equal-length series.
pub fn rmse_velocity(simulated: &[f64], measured: &[f64]) -> Result<f64> {
    if simulated.len() != measured.len() || simulated.is_empty() {
        return Err(Error::format(format!(
            "RMSE needs equal-length non-empty series, got {} and {}",
            simulated.len(),
            measured.len()
        )));
    }
    let mut acc = 0.0;
    for (a, b) in simulated.iter().zip(measured) {
        let e = a - b;
        acc += e * e;
    }
    Ok((acc / simulated.len() as f64).sqrt())
}

/// Squared-error sum of the follower-velocity channel over the first
/// `n_fit` samples, re-simulating with explicit Euler from the measured
/// initial state. This is the exact arithmetic of
/// [`crate::platoon::simulate_follower`] with [`Integrator::Euler`], inlined
/// so a calibration evaluates nothing it does not need.
///
/// [`Integrator::Euler`]: crate::platoon::Integrator::Euler
fn velocity_sq_error(params: &ModelParams, traj: &Trajectory, n_fit: usize) -> f64 {
    let lv = traj.v_lead();
    let mv = traj.v_follow();
    let dt = traj.dt();
    let mut s = traj.space_gap()[0];
    let mut v = mv[0];
    let mut acc = 0.0;
    for i in 0..n_fit {
        let e = v - mv[i];
        acc += e * e;
        if i + 1 == n_fit {
            break;
        }
        let a_i = params.accel_raw(s, v, lv[i] - v);
        let s_next = s + dt * (lv[i] - v);
        let v_next = v + dt * a_i;
        s = s_next;
        v = v_next;
        if !(s.is_finite() && v.is_finite()) {
            return f64::INFINITY;
        }
    }
    acc
}

/// Pooled training-velocity RMSE of `params` across all trajectories:
/// `sqrt(sum of squared errors / total training samples)`.
pub fn objective(params: &ModelParams, problem: &CalibrationProblem) -> f64 {
    let mut total_sq = 0.0;
    let mut total_n = 0usize;
    for (i, traj) in problem.trajectories.iter().enumerate() {
        let n_fit = problem.train_len(i);
        total_sq += velocity_sq_error(params, traj, n_fit);
        total_n += n_fit;
    }
    (total_sq / total_n as f64).sqrt()
}

/// One Nelder–Mead run's bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub index: usize,
    pub initial: [f64; 4],
    pub solution: [f64; 4],
    pub rmse_velocity_mps: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Per-trajectory and pooled errors of a parameter set, split into the
/// training and held-out portions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub trajectory: String,
    pub n_train: usize,
    pub n_test: usize,
    pub velocity_train_rmse_mps: f64,
    pub velocity_test_rmse_mps: Option<f64>,
    pub space_gap_train_rmse_m: f64,
    pub space_gap_test_rmse_m: Option<f64>,
}

/// Sentence embedded in every serialized [`ErrorTable`] so downstream
/// consumers of the JSON know how the held-out errors were produced.
pub const EVALUATION_NOTE: &str =
    "each trajectory is simulated continuously over its full span from \
     its measured initial state; test-portion errors carry the state accumulated over the training \
     portion rather than re-initializing at the split boundary";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    /// How the errors were measured; see [`EVALUATION_NOTE`].
    #[serde(default)]
    pub evaluation: String,
    pub rows: Vec<ErrorRow>,
    /// Pooled over every trajectory (labelled "all").
    pub pooled: ErrorRow,
}

impl ErrorTable {
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "trajectory",
            "velocity_train_rmse_mps",
            "velocity_test_rmse_mps",
            "space_gap_train_rmse_m",
            "space_gap_test_rmse_m",
        ])?;
        for row in self.rows.iter().chain(std::iter::once(&self.pooled)) {
            w.serialize((
                &row.trajectory,
                row.velocity_train_rmse_mps,
                row.velocity_test_rmse_mps,
                row.space_gap_train_rmse_m,
                row.space_gap_test_rmse_m,
            ))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The calibrated parameters plus everything needed to audit the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub best_params: ModelParams,
    /// Pooled training-velocity RMSE at `best_params` — the minimum over all
    /// converged starts.
    pub best_rmse_velocity_mps: f64,
    pub best_start_index: usize,
    pub starts: Vec<StartRecord>,
    pub table: ErrorTable,
}

fn sq_error_accumulate(sim: &[f64], measured: &[f64], range: std::ops::Range<usize>) -> f64 {
    let mut acc = 0.0;
    for i in range {
        let e = sim[i] - measured[i];
        acc += e * e;
    }
    acc
}

/// Error table of `params` on the problem's trajectories. The follower is
/// simulated over each trajectory's full span from its measured initial
/// state — the held-out portion continues the same simulation rather than
/// re-initializing at the boundary.
pub fn evaluate(params: &ModelParams, problem: &CalibrationProblem) -> Result<ErrorTable> {
    use crate::platoon::{simulate_follower, Integrator};
    use crate::series::UniformSeries;

    let mut rows = Vec::with_capacity(problem.trajectories.len());
    let mut pooled = [0.0f64; 4]; // v_train, v_test, s_train, s_test squared sums
    let mut pooled_n = [0usize; 2]; // train, test sample counts

    for (i, traj) in problem.trajectories.iter().enumerate() {
        let lead = UniformSeries::new(traj.t0(), traj.dt(), traj.v_lead().to_vec())?;
        let sim = simulate_follower(
            params,
            &lead,
            traj.space_gap()[0],
            traj.v_follow()[0],
            traj.dt(),
            Integrator::Euler,
        )?;
        let n = traj.len();
        let n_train = problem.train_len(i);
        let n_test = n - n_train;

        let v_train = sq_error_accumulate(&sim.v, traj.v_follow(), 0..n_train);
        let s_train = sq_error_accumulate(&sim.s, traj.space_gap(), 0..n_train);
        let v_test = sq_error_accumulate(&sim.v, traj.v_follow(), n_train..n);
        let s_test = sq_error_accumulate(&sim.s, traj.space_gap(), n_train..n);

        pooled[0] += v_train;
        pooled[1] += v_test;
        pooled[2] += s_train;
        pooled[3] += s_test;
        pooled_n[0] += n_train;
        pooled_n[1] += n_test;

        let rmse = |sq: f64, n: usize| (sq / n as f64).sqrt();
        rows.push(ErrorRow {
            trajectory: traj
                .meta
                .label
                .clone()
                .unwrap_or_else(|| format!("trajectory_{i}")),
            n_train,
            n_test,
            velocity_train_rmse_mps: rmse(v_train, n_train),
            velocity_test_rmse_mps: (n_test > 0).then(|| rmse(v_test, n_test)),
            space_gap_train_rmse_m: rmse(s_train, n_train),
            space_gap_test_rmse_m: (n_test > 0).then(|| rmse(s_test, n_test)),
        });
    }

    let rmse = |sq: f64, n: usize| (sq / n as f64).sqrt();
    let pooled_row = ErrorRow {
        trajectory: "all".into(),
        n_train: pooled_n[0],
        n_test: pooled_n[1],
        velocity_train_rmse_mps: rmse(pooled[0], pooled_n[0]),
        velocity_test_rmse_mps: (pooled_n[1] > 0).then(|| rmse(pooled[1], pooled_n[1])),
        space_gap_train_rmse_m: rmse(pooled[2], pooled_n[0]),
        space_gap_test_rmse_m: (pooled_n[1] > 0).then(|| rmse(pooled[3], pooled_n[1])),
    };
    Ok(ErrorTable {
        evaluation: EVALUATION_NOTE.to_owned(),
        rows,
        pooled: pooled_row,
    })
}

fn draw_start(rng: &mut ChaCha8Rng, bounds: &ParamBounds) -> [f64; 4] {
    let mut x = [0.0; 4];
    for ((xi, lo), hi) in x.iter_mut().zip(&bounds.lower).zip(&bounds.upper) {
        let u: f64 = rng.gen();
        *xi = lo + (hi - lo) * u;
    }
    x
}

fn calibrate_impl(problem: &CalibrationProblem, parallel: bool) -> Result<CalibrationResult> {
    let config = &problem.config;

    // All starting points are drawn up front from one seeded stream, so the
    // result is independent of how the runs are later scheduled.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let starts: Vec<(usize, [f64; 4])> = (0..config.n_starts)
        .map(|i| (i, draw_start(&mut rng, &config.bounds)))
        .collect();

    let options = NmOptions {
        max_iters: config.max_iterations,
        ..NmOptions::default()
    };
    let run = |(index, initial): (usize, [f64; 4])| -> StartRecord {
        let f = |x: &[f64; DIM]| match ModelParams::new(x[0], x[1], x[2], x[3]) {
            Ok(p) => objective(&p, problem),
            Err(_) => f64::INFINITY,
        };
        let out = minimize(
            f,
            initial,
            &config.bounds.lower,
            &config.bounds.upper,
            &options,
        );
        StartRecord {
            index,
            initial,
            solution: out.x,
            rmse_velocity_mps: out.f,
            converged: out.converged,
            iterations: out.iterations,
        }
    };

    let records = if parallel {
        par::map_collect(starts, run)
    } else {
        par::map_collect_serial(starts, run)
    };

    // Winner: lowest final RMSE among converged runs; ties go to the lowest
    // start index (records are already in index order).
    let mut best: Option<&StartRecord> = None;
    for record in records.iter().filter(|r| r.converged) {
        let better = match best {
            None => true,
            Some(b) => record.rmse_velocity_mps < b.rmse_velocity_mps,
        };
        if better {
            best = Some(record);
        }
    }
    let best = best.ok_or(Error::NoConvergence(config.n_starts))?;

    let p = best.solution;
    let best_params = ModelParams::new(p[0], p[1], p[2], p[3])?;
    let table = evaluate(&best_params, problem)?;
    Ok(CalibrationResult {
        best_params,
        best_rmse_velocity_mps: best.rmse_velocity_mps,
        best_start_index: best.index,
        starts: records,
        table,
    })
}

/// Multi-start calibration. Runs the starts in parallel when the `parallel`
/// feature is enabled; the result is identical either way.
pub fn calibrate(problem: &CalibrationProblem) -> Result<CalibrationResult> {
    calibrate_impl(problem, true)
}

/// Sequential twin of [`calibrate`], for baselines and benchmarks.
pub fn calibrate_serial(problem: &CalibrationProblem) -> Result<CalibrationResult> {
    calibrate_impl(problem, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platoon::{simulate_follower, Integrator};
    use crate::profiles::BuiltinProfile;
    use crate::series::UniformSeries;
    use crate::testutil::{max_setting, min_setting};
    use crate::trajectory::TrajectoryMeta;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Trajectory generated by the model itself: the exact Euler solution.
    fn synthetic(params: &ModelParams, lead: &UniformSeries, label: &str) -> Trajectory {
        let v0 = lead.values()[0];
        let s0 = params.equilibrium_gap(v0).unwrap();
        let sim = simulate_follower(params, lead, s0, v0, lead.dt(), Integrator::Euler).unwrap();
        let meta = TrajectoryMeta {
            label: Some(label.into()),
            ..TrajectoryMeta::default()
        };
        Trajectory::new(
            lead.t0(),
            lead.dt(),
            lead.values().to_vec(),
            sim.v,
            sim.s,
            meta,
        )
        .unwrap()
    }

    fn problem_with(
        trajectories: Vec<Trajectory>,
        mutate: impl FnOnce(&mut CalibrationConfig),
    ) -> CalibrationProblem {
        let mut config = CalibrationConfig::default();
        mutate(&mut config);
        CalibrationProblem::new(trajectories, config).unwrap()
    }

    #[test]
    fn rmse_reference_values() {
        assert_eq!(
            rmse_velocity(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            rmse_velocity(&[1.1, 2.1, 3.1], &[1.0, 2.0, 3.0]).unwrap(),
            0.1,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            rmse_velocity(&[20.0, 20.0, 20.0], &[20.0, 20.3, 19.7]).unwrap(),
            0.244949,
            epsilon = 1e-4
        );
        assert!(rmse_velocity(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse_velocity(&[], &[]).is_err());
    }

    #[test]
    fn objective_is_zero_on_self_generated_data() {
        let truth = ModelParams::new(0.1, 0.5, 1.2, 6.0).unwrap();
        let lead = BuiltinProfile::D.series(0.1, 1).unwrap();
        // Full split: with the default 0.5, the training window on D ends at
        // the first step, before the gains have anything to act on.
        let problem = problem_with(vec![synthetic(&truth, &lead, "D")], |c| c.split = 1.0);
        assert_eq!(objective(&truth, &problem), 0.0);

        let perturbed = ModelParams::new(0.1, 0.55, 1.2, 6.0).unwrap();
        assert!(objective(&perturbed, &problem) > 1e-4);
    }

    #[test]
    fn objective_matches_follower_simulation_bitwise() {
        let truth = ModelParams::new(0.1, 0.5, 1.2, 6.0).unwrap();
        let candidate = ModelParams::new(0.09, 0.4, 1.5, 5.0).unwrap();
        let lead = BuiltinProfile::D.series(0.1, 1).unwrap();
        let traj = synthetic(&truth, &lead, "D");
        let problem = problem_with(vec![traj.clone()], |c| c.split = 0.6);

        let n_fit = problem.train_len(0);
        let sim = simulate_follower(
            &candidate,
            &lead,
            traj.space_gap()[0],
            traj.v_follow()[0],
            0.1,
            Integrator::Euler,
        )
        .unwrap();
        let reference = rmse_velocity(&sim.v[..n_fit], &traj.v_follow()[..n_fit]).unwrap();
        let direct = objective(&candidate, &problem);
        assert_eq!(direct.to_bits(), reference.to_bits());
    }

    #[test]
    fn train_split_rounds_and_clamps() {
        let truth = min_setting();
        let lead = BuiltinProfile::D.series(0.1, 1).unwrap(); // 601 samples
        let traj = synthetic(&truth, &lead, "D");

        let half = problem_with(vec![traj.clone()], |c| c.split = 0.5);
        assert_eq!(half.train_len(0), 301); // round(300.5)

        let all = problem_with(vec![traj.clone()], |c| c.split = 1.0);
        assert_eq!(all.train_len(0), 601);

        let sliver = problem_with(vec![traj], |c| c.split = 1e-9);
        assert_eq!(sliver.train_len(0), 1);
    }

    #[test]
    fn settings_are_distinguishable_on_oscillatory_lead() {
        // The two factory settings produce clearly different follower
        // behaviour on the same lead; the objective must separate them.
        let lead = BuiltinProfile::F.series(0.1, 4).unwrap();
        let traj = synthetic(&min_setting(), &lead, "F");
        let problem = problem_with(vec![traj], |_| {});
        let cross = objective(&max_setting(), &problem);
        assert!(cross > 0.3, "settings not separated: {cross}");
        assert_relative_eq!(cross, 0.620888082, max_relative = 1e-8);
    }

    #[test]
    fn pooling_is_order_invariant() {
        let truth = ModelParams::new(0.1, 0.5, 1.2, 6.0).unwrap();
        let candidate = ModelParams::new(0.12, 0.45, 1.3, 5.5).unwrap();
        let a = synthetic(&truth, &BuiltinProfile::D.series(0.1, 1).unwrap(), "D");
        let b = synthetic(&truth, &BuiltinProfile::F.series(0.1, 1).unwrap(), "F");
        let ab = problem_with(vec![a.clone(), b.clone()], |_| {});
        let ba = problem_with(vec![b, a], |_| {});
        assert_relative_eq!(
            objective(&candidate, &ab),
            objective(&candidate, &ba),
            max_relative = 1e-12
        );
    }

    #[test]
    fn collapsed_bounds_recover_the_pinned_point() {
        let truth = ModelParams::new(0.1, 0.5, 1.2, 6.0).unwrap();
        let lead = BuiltinProfile::D.series(0.1, 1).unwrap();
        let pin = [truth.k1(), truth.k2(), truth.tau_e(), truth.eta()];
        let problem = problem_with(vec![synthetic(&truth, &lead, "D")], |c| {
            c.bounds = ParamBounds {
                lower: pin,
                upper: pin,
            };
            c.n_starts = 1;
        });
        let result = calibrate(&problem).unwrap();
        assert_eq!(result.best_params, truth);
        assert_eq!(result.best_rmse_velocity_mps, 0.0);
        assert_eq!(result.starts.len(), 1);
        assert!(result.starts[0].converged);
    }

    #[test]
    fn small_multistart_recovers_truth() {
        let truth = ModelParams::new(0.1, 0.5, 1.2, 6.0).unwrap();
        let lead = BuiltinProfile::D.series(0.1, 2).unwrap();
        let problem = problem_with(vec![synthetic(&truth, &lead, "D")], |c| {
            c.n_starts = 8;
            c.seed = 42;
        });
        let result = calibrate(&problem).unwrap();
        assert!(
            result.best_rmse_velocity_mps < 1e-4,
            "best RMSE {}",
            result.best_rmse_velocity_mps
        );
        assert_relative_eq!(result.best_params.k1(), truth.k1(), max_relative = 0.02);
        assert_relative_eq!(result.best_params.k2(), truth.k2(), max_relative = 0.02);
        assert_relative_eq!(
            result.best_params.tau_e(),
            truth.tau_e(),
            max_relative = 0.02
        );
        assert_relative_eq!(result.best_params.eta(), truth.eta(), max_relative = 0.02);
        assert!(problem
            .config()
            .bounds
            .contains(&result.starts[result.best_start_index].solution));
    }

    #[test]
    fn calibration_is_deterministic_and_matches_serial() {
        let truth = ModelParams::new(0.1, 0.5, 1.2, 6.0).unwrap();
        let lead = BuiltinProfile::D.series(0.1, 1).unwrap();
        let problem = problem_with(vec![synthetic(&truth, &lead, "D")], |c| {
            c.n_starts = 4;
            c.seed = 3;
        });
        let a = calibrate(&problem).unwrap();
        let b = calibrate(&problem).unwrap();
        let s = calibrate_serial(&problem).unwrap();
        let json = |r: &CalibrationResult| serde_json::to_string(r).unwrap();
        assert_eq!(json(&a), json(&b));
        assert_eq!(json(&a), json(&s));
    }

    #[test]
    fn more_starts_never_raise_the_best_rmse() {
        let truth = ModelParams::new(0.1, 0.5, 1.2, 6.0).unwrap();
        let lead = BuiltinProfile::D.series(0.1, 1).unwrap();
        let traj = synthetic(&truth, &lead, "D");
        let few = problem_with(vec![traj.clone()], |c| {
            c.n_starts = 2;
            c.seed = 9;
        });
        let many = problem_with(vec![traj], |c| {
            c.n_starts = 6;
            c.seed = 9;
        });
        let few = calibrate(&few).unwrap();
        let many = calibrate(&many).unwrap();
        // Same seed: the larger run's first draws are exactly the smaller
        // run's draws, so its minimum can only improve.
        assert_eq!(few.starts[0].initial, many.starts[0].initial);
        assert_eq!(few.starts[1].initial, many.starts[1].initial);
        assert!(many.best_rmse_velocity_mps <= few.best_rmse_velocity_mps);
    }

    #[test]
    fn zero_iteration_budget_reports_no_convergence() {
        let truth = ModelParams::new(0.1, 0.5, 1.2, 6.0).unwrap();
        let lead = BuiltinProfile::D.series(0.1, 1).unwrap();
        let problem = problem_with(vec![synthetic(&truth, &lead, "D")], |c| {
            c.n_starts = 3;
            c.max_iterations = 0;
        });
        match calibrate(&problem) {
            Err(Error::NoConvergence(n)) => assert_eq!(n, 3),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn evaluate_builds_a_consistent_error_table() {
        let truth = ModelParams::new(0.1, 0.5, 1.2, 6.0).unwrap();
        let lead = BuiltinProfile::D.series(0.1, 1).unwrap();
        let traj = synthetic(&truth, &lead, "D");
        let problem = problem_with(vec![traj.clone()], |_| {});
        let table = evaluate(&truth, &problem).unwrap();
        assert_eq!(table.evaluation, EVALUATION_NOTE);
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].trajectory, "D");
        assert!(table.rows[0].velocity_train_rmse_mps < 1e-12);
        assert!(table.rows[0].velocity_test_rmse_mps.unwrap() < 1e-12);
        assert!(table.rows[0].space_gap_train_rmse_m < 1e-12);
        assert_eq!(table.pooled.trajectory, "all");
        assert_eq!(table.pooled.n_train + table.pooled.n_test, traj.len());

        // A constant 1 m bias on the measured gap: the simulation starts
        // from the biased gap and relaxes toward the unbiased equilibrium,
        // so the gap RMSE is positive but bounded by the bias.
        let biased = Trajectory::new(
            traj.t0(),
            traj.dt(),
            traj.v_lead().to_vec(),
            traj.v_follow().to_vec(),
            traj.space_gap().iter().map(|g| g + 1.0).collect(),
            TrajectoryMeta::default(),
        )
        .unwrap();
        let problem = problem_with(vec![biased], |_| {});
        let table = evaluate(&truth, &problem).unwrap();
        let row = &table.rows[0];
        // The simulation starts from the biased gap, which decays toward the
        // true equilibrium, so the gap error is bounded by the initial bias.
        assert!(row.space_gap_train_rmse_m > 0.0 && row.space_gap_train_rmse_m <= 1.0 + 1e-9);
    }

    #[test]
    fn evaluate_with_full_split_leaves_test_columns_empty() {
        let truth = ModelParams::new(0.1, 0.5, 1.2, 6.0).unwrap();
        let lead = BuiltinProfile::D.series(0.1, 1).unwrap();
        let problem = problem_with(vec![synthetic(&truth, &lead, "D")], |c| c.split = 1.0);
        let table = evaluate(&truth, &problem).unwrap();
        assert!(table.rows[0].velocity_test_rmse_mps.is_none());
        assert!(table.pooled.space_gap_test_rmse_m.is_none());

        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "trajectory,velocity_train_rmse_mps,velocity_test_rmse_mps,space_gap_train_rmse_m,space_gap_test_rmse_m"
        );
        let data = lines.next().unwrap();
        assert!(data.starts_with("D,"));
        assert!(data.contains(",,"), "missing empty test column in {data}");
        assert!(text.lines().nth(2).unwrap().starts_with("all,"));
    }

    #[test]
    fn config_json_round_trip_with_partial_input() {
        let config: CalibrationConfig =
            serde_json::from_str(r#"{"seed": 7, "n_starts": 12}"#).unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.n_starts, 12);
        assert_eq!(config.dt, 0.1);
        assert_eq!(config.split, 0.5);
        assert_eq!(config.max_iterations, 2000);
        let text = serde_json::to_string(&config).unwrap();
        let back: CalibrationConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn problem_validation_rejects_bad_inputs() {
        let truth = ModelParams::new(0.1, 0.5, 1.2, 6.0).unwrap();
        let lead = BuiltinProfile::D.series(0.1, 1).unwrap();
        let traj = synthetic(&truth, &lead, "D");

        assert!(CalibrationProblem::new(vec![], CalibrationConfig::default()).is_err());

        // The trajectory is sampled at 0.1 s, so a 0.05 s grid must fail.
        let config = CalibrationConfig {
            dt: 0.05,
            ..CalibrationConfig::default()
        };
        assert!(CalibrationProblem::new(vec![traj.clone()], config).is_err());

        let config = CalibrationConfig {
            split: 0.0,
            ..CalibrationConfig::default()
        };
        assert!(CalibrationProblem::new(vec![traj.clone()], config).is_err());

        let config = CalibrationConfig {
            n_starts: 0,
            ..CalibrationConfig::default()
        };
        assert!(CalibrationProblem::new(vec![traj.clone()], config).is_err());

        let mut bounds = ParamBounds::default();
        bounds.upper[0] = -1.0;
        let config = CalibrationConfig {
            bounds,
            ..CalibrationConfig::default()
        };
        assert!(CalibrationProblem::new(vec![traj], config).is_err());
    }
}
