// Conditional sum of two denoised windows followed by peak tracking.
//
// The "cascade" window carries the heart plus a residual artifact; the
// "SSA" window carries the heart plus a different artifact that sometimes
// dominates. Fusion only adds the SSA window when its peak agrees with the
// previous estimate.
//
// ```text
// cargo run --example fusion_tracking
// ```

use std::f64::consts::TAU;

use ppgtrack::dsp::{periodogram, Signal};
use ppgtrack::fusion::{conditional_sum, spectrum_argmax_bpm, FusionInput};
use ppgtrack::tracker::{Tracker, TrackerParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 125.0;
    let mut tracker = Tracker::new(TrackerParams::default())?;
    let mut prev = None;
    let mut worst: f64 = 0.0;
    println!("{:>6} {:>8} {:>8} {:>8} {:>6}", "window", "truth", "B_S", "B_est", "branch");
    for w in 1..=20usize {
        let bpm = 90.0 + 1.0 * w as f64;
        let hz = bpm / 60.0;
        let tone = |f: f64, a: f64| -> Vec<f64> { (0..1000).map(|i| a * (TAU * f * i as f64 / fs).sin()).collect() };
        let mix = |a: Vec<f64>, b: Vec<f64>| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
        let rls = Signal::new(mix(tone(hz, 1.0), tone(2.6, 0.6)), fs)?;
        // every fifth window the SSA output is dominated by motion at 1.0 Hz
        let ssa_motion = if w % 5 == 0 { 3.0 } else { 0.2 };
        let ssa = Signal::new(mix(tone(hz, 1.0), tone(1.0, ssa_motion)), fs)?;

        let b_s = spectrum_argmax_bpm(&ssa, 4096, 0.4, 3.5)?;
        let fused = conditional_sum(&FusionInput {
            rls: &rls,
            ssa: &ssa,
            ssa_bpm: b_s,
            prev_bpm: prev,
            epsilon: 15.0,
            window_index: w,
            signed: false,
        })?;
        let b_est = tracker.update(&periodogram(&fused.signal, 4096)?)?;
        prev = Some(b_est);
        worst = worst.max((b_est - bpm).abs());
        println!("{w:>6} {bpm:>8.1} {b_s:>8.1} {b_est:>8.1} {:>6}", fused.branch);
    }
    println!("largest error: {worst:.2} BPM");
    if worst > 5.0 {
        return Err("tracker lost the heart rate".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
