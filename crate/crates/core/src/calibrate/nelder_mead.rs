//! Bounded Nelder–Mead simplex minimizer over four parameters.
//!
//! Candidate points are clipped to the box constraints before evaluation, so
//! the objective is never called outside bounds. Standard coefficients
//! (reflection 1, expansion 2, contraction 0.5, shrink 0.5).

pub(crate) const DIM: usize = 4;

#[derive(Debug, Clone, Copy)]
pub(crate) struct NmOptions {
    pub xtol: f64,
    pub ftol: f64,
    pub max_iters: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions {
            xtol: 1e-6,
            ftol: 1e-8,
            max_iters: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NmOutcome {
    pub x: [f64; DIM],
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective value after each iteration; non-increasing. Consumed
    /// by the convergence tests.
    #[cfg_attr(not(test), allow(dead_code))]
    pub history: Vec<f64>,
}

fn clip(x: &mut [f64; DIM], lower: &[f64; DIM], upper: &[f64; DIM]) {
    for i in 0..DIM {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

/// Minimize `f` from `x0` within `[lower, upper]`.
pub(crate) fn minimize<F: FnMut(&[f64; DIM]) -> f64>(
    mut f: F,
    x0: [f64; DIM],
    lower: &[f64; DIM],
    upper: &[f64; DIM],
    options: &NmOptions,
) -> NmOutcome {
    let mut start = x0;
    clip(&mut start, lower, upper);

    // Initial simplex: perturb each coordinate by 5% of its range, flipping
    // direction where that would leave the box.
    let mut simplex: Vec<[f64; DIM]> = Vec::with_capacity(DIM + 1);
    simplex.push(start);
    for i in 0..DIM {
        let h = 0.05 * (upper[i] - lower[i]);
        let mut v = start;
        v[i] = if start[i] + h <= upper[i] {
            start[i] + h
        } else {
            start[i] - h
        };
        clip(&mut v, lower, upper);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(&mut f).collect();

    let order = |simplex: &mut Vec<[f64; DIM]>, values: &mut Vec<f64>| {
        let mut idx: Vec<usize> = (0..simplex.len()).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        *simplex = idx.iter().map(|&i| simplex[i]).collect();
        *values = idx.iter().map(|&i| values[i]).collect();
    };

    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    loop {
        order(&mut simplex, &mut values);

        let mut x_spread = 0.0f64;
        for v in &simplex[1..] {
            for i in 0..DIM {
                x_spread = x_spread.max((v[i] - simplex[0][i]).abs());
            }
        }
        let f_spread = values[1..]
            .iter()
            .map(|&v| (v - values[0]).abs())
            .fold(0.0f64, f64::max);
        if x_spread <= options.xtol && f_spread <= options.ftol {
            converged = true;
            break;
        }
        if iterations >= options.max_iters {
            break;
        }
        iterations += 1;

        let worst = DIM;
        let mut centroid = [0.0; DIM];
        for v in &simplex[..worst] {
            for i in 0..DIM {
                centroid[i] += v[i];
            }
        }
        for c in &mut centroid {
            *c /= worst as f64;
        }

        let project = |scale: f64, target: &[f64; DIM]| {
            let mut p = [0.0; DIM];
            for i in 0..DIM {
                p[i] = centroid[i] + scale * (target[i] - centroid[i]);
            }
            clip(&mut p, lower, upper);
            p
        };

        let reflected = project(-1.0, &simplex[worst]);
        let f_reflected = f(&reflected);

        if f_reflected < values[0] {
            let expanded = project(-2.0, &simplex[worst]);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[worst - 1] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            // Contract toward the better of the reflected and worst points.
            let (toward, bar) = if f_reflected < values[worst] {
                (reflected, f_reflected)
            } else {
                (simplex[worst], values[worst])
            };
            let contracted = project(0.5, &toward);
            let f_contracted = f(&contracted);
            if f_contracted <= bar {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // Shrink everything toward the best vertex.
                let best = simplex[0];
                for k in 1..=DIM {
                    for i in 0..DIM {
                        simplex[k][i] = best[i] + 0.5 * (simplex[k][i] - best[i]);
                    }
                    values[k] = f(&simplex[k]);
                }
            }
        }

        let best_now = values.iter().cloned().fold(f64::INFINITY, f64::min);
        history.push(match history.last() {
            Some(&prev) => prev.min(best_now),
            None => best_now,
        });
    }

    NmOutcome {
        x: simplex[0],
        f: values[0],
        iterations,
        converged,
        history,
    }
}
