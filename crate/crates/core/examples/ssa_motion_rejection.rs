// SSA decomposition of one window, grouping by dominant frequency, and
// removal of the group that matches the accelerometer.
//
// ```text
// cargo run --release --example ssa_motion_rejection
// ```

use std::f64::consts::TAU;

use ppgtrack::dsp::{periodogram, Signal};
use ppgtrack::ssa::{group_components, reject_motion_components, ssa_decompose_leading};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 125.0;
    let (heart, motion) = (1.5, 2.4);
    let tone = |f: f64, a: f64| -> Vec<f64> { (0..1000).map(|i| a * (TAU * f * i as f64 / fs).sin()).collect() };
    let ppg: Vec<f64> = tone(heart, 1.0).iter().zip(tone(motion, 2.0)).map(|(a, b)| a + b).collect();
    let ppg = Signal::new(ppg, fs)?;
    let accel = Signal::new(tone(motion, 1.0), fs)?;

    let dec = ssa_decompose_leading(&ppg, 400, 0.99)?;
    let kept = dec.count_for_mass(0.99);
    println!("leading singular values: {:?}", &dec.singular_values()[..4.min(kept + 2)]);
    println!("{kept} components hold 99% of the squared singular values");

    let bin = 60.0 * fs / 4096.0;
    let groups = group_components(&dec, 2.0 * bin, 0.99, 4096)?;
    for g in &groups {
        println!("group {:?}: dominant {:?} BPM", g.members, g.dominant_bpm);
    }

    let silent = Signal::zeros(1000, fs)?;
    let spectra = [periodogram(&accel, 4096)?, periodogram(&silent, 4096)?, periodogram(&silent, 4096)?];
    let cleaned = reject_motion_components(&groups, &spectra, Some(88.0), 10.0, fs)?;
    let s = periodogram(&cleaned, 4096)?;
    let peak = s.band_argmax(0.4, 3.5).ok_or("flat output")?;
    println!("after rejection the peak is at {:.1} BPM", peak.bpm);

    let input_peak = periodogram(&ppg, 4096)?.band_argmax(0.4, 3.5).ok_or("flat input")?;
    println!("before rejection it was at {:.1} BPM", input_peak.bpm);
    if (peak.bpm - heart * 60.0).abs() > bin {
        return Err("motion group survived".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
