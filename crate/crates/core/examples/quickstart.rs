//! Minimal tour of the library: a string-stability report, then a platoon
//! simulation behind a step-down/step-up lead schedule.
//!
//! Run with `cargo run -p ovrv --example quickstart`.

use ovrv::{
    analyze, generate, simulate_platoon, ModelParams, PlatoonScenario, ProfileSpec, Segment,
    Transition,
};

fn main() -> ovrv::Result<()> {
    // A short-gap controller setting (~0.93 s time gap at 20 m/s).
    // Aggressive settings like this one amplify disturbances.
    let params = ModelParams::new(0.0782, 0.4445, 0.5162, 8.3365)?;

    let report = analyze(&params)?;
    println!(
        "lambda2 = {:+.3}  string stable: {}  peak gain {:.2} dB at {:.4} rad/s",
        report.lambda2, report.is_string_stable, report.peak_gain_db, report.peak_omega
    );

    // Nine identical followers behind a 20 -> 15 -> 20 m/s step schedule.
    let lead = generate(&ProfileSpec::StepSchedule {
        segments: vec![
            Segment::new(20.0, 60.0),
            Segment::new(15.0, 60.0),
            Segment::new(20.0, 180.0),
        ],
        dt: 0.1,
        transition: Transition::Instantaneous,
    })?;
    let scenario = PlatoonScenario::homogeneous(lead, params, 9);
    let result = simulate_platoon(&scenario)?;

    // amplification_ratios[i] compares vehicle i+1's velocity peak-to-peak
    // against vehicle i's; > 1 means the oscillation grows along the platoon.
    let summary = result.summary();
    for (i, ratio) in summary.amplification_ratios.iter().enumerate() {
        match ratio {
            Some(r) => println!("vehicle {:>2} / vehicle {:>2}: {:.3}", i + 1, i, r),
            None => println!("vehicle {:>2}: predecessor held a constant speed", i + 1),
        }
    }
    Ok(())
}
