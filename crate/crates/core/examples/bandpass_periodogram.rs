// Bandpass a noisy two-tone window and read its spectral peaks.
//
// ```text
// cargo run --example bandpass_periodogram
// ```

use std::f64::consts::TAU;

use ppgtrack::dsp::{bandpass_spectral, dominant_peaks, periodogram, Signal};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 125.0;
    // 1.4 Hz pulse, 5 Hz interference and a slow baseline drift
    let x: Vec<f64> = (0..1000)
        .map(|n| {
            let t = n as f64 / fs;
            (TAU * 1.4 * t).sin() + 2.0 * (TAU * 5.0 * t).sin() + 3.0 * (TAU * 0.1 * t).sin()
        })
        .collect();
    let raw = Signal::new(x, fs)?;
    let clean = bandpass_spectral(&raw, 0.4, 3.5)?;

    let before = periodogram(&raw, 4096)?;
    let after = periodogram(&clean, 4096)?;
    let strongest = |s: &ppgtrack::dsp::Spectrum| {
        (0..s.len()).max_by(|a, b| s.power()[*a].total_cmp(&s.power()[*b])).map(|k| s.bpm_at(k))
    };
    println!("strongest bin before filtering: {:.1} BPM", strongest(&before).unwrap_or(0.0));
    println!("strongest bin after filtering:  {:.1} BPM", strongest(&after).unwrap_or(0.0));
    println!("bin width: {:.3} BPM", after.bin_width_bpm());

    let sum_sq: f64 = clean.samples().iter().map(|v| v * v).sum();
    println!("energy kept: {:.1}% of the input", 100.0 * sum_sq / raw.energy());

    for p in dominant_peaks(&after, 0.5)? {
        println!("dominant peak at {:.1} BPM (power {:.1})", p.bpm, p.power);
    }
    let peak = after.band_argmax(0.4, 3.5).ok_or("no in-band peak")?;
    if (peak.bpm - 84.0).abs() > after.bin_width_bpm() {
        return Err(format!("expected 84 BPM, found {:.1}", peak.bpm).into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
