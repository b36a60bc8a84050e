// Three cascaded RLS cancellers, one per accelerometer axis, versus the
// same cascade with LMS stages.
//
// ```text
// cargo run --release --example cascade_rls
// ```

use std::f64::consts::TAU;

use ppgtrack::adaptive::{cascade_filter, Algorithm, CascadeConfig};
use ppgtrack::dsp::{periodogram, Signal, Spectrum};

fn fir(x: &[f64], h: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| h.iter().enumerate().filter(|(j, _)| *j <= n).map(|(j, c)| c * x[n - j]).sum())
        .collect()
}

fn power_near(s: &Spectrum, hz: f64) -> f64 {
    let k = s.nearest_index(hz * 60.0);
    s.power()[k.saturating_sub(2)..=(k + 2).min(s.len() - 1)].iter().sum()
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 125.0;
    let n = 1000;
    let heart_hz = 1.3;
    let artifacts = [1.9, 2.6, 0.8];
    let couplings = [[0.9, 0.4, -0.2], [-0.7, 0.3, 0.2], [0.6, -0.5, 0.1]];

    let tone = |f: f64, a: f64| -> Vec<f64> { (0..n).map(|i| a * (TAU * f * i as f64 / fs).sin()).collect() };
    let axes: Vec<Vec<f64>> = artifacts.iter().map(|&f| tone(f, 1.5)).collect();
    let mut ppg = tone(heart_hz, 1.0);
    for (a, h) in axes.iter().zip(&couplings) {
        for (p, v) in ppg.iter_mut().zip(fir(a, h)) {
            *p += v;
        }
    }

    let ppg = Signal::new(ppg, fs)?;
    let [ax, ay, az] = [0, 1, 2].map(|i| Signal::new(axes[i].clone(), fs).unwrap());
    let input = periodogram(&ppg, 4096)?;
    println!("input peak: {:.1} BPM", input.band_argmax(0.4, 3.5).ok_or("flat")?.bpm);

    for algorithm in [Algorithm::Rls, Algorithm::Lms] {
        let cfg = CascadeConfig { algorithm, ..CascadeConfig::default() };
        let y = cascade_filter(&ppg, &ax, &ay, &az, &cfg)?;
        let out = periodogram(&y, 4096)?;
        print!("{algorithm:?}: peak {:.1} BPM;", out.band_argmax(0.4, 3.5).ok_or("flat")?.bpm);
        for f in artifacts {
            let db = 10.0 * (power_near(&out, f) / power_near(&input, f)).log10();
            print!(" {f} Hz {db:+.1} dB");
        }
        let db = 10.0 * (power_near(&out, heart_hz) / power_near(&input, heart_hz)).log10();
        println!("; heart {db:+.1} dB");
        if algorithm == Algorithm::Rls {
            let peak = out.band_argmax(0.4, 3.5).ok_or("flat")?.bpm;
            if (peak - heart_hz * 60.0).abs() > 2.0 * out.bin_width_bpm() {
                return Err(format!("cascade peak {peak:.1} BPM is not the heart").into());
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
