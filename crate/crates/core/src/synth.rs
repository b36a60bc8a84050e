//! Synthetic recordings with known heart rate.
//!
//! The PPG channels carry a phase-continuous heart sinusoid that follows a
//! piecewise-linear BPM trajectory, plus artifact tones passed through FIR
//! couplings, plus white noise. Each accelerometer axis carries the artifact
//! tones assigned to it and its own noise.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::{param, Error, Result};
use crate::io::Recording;
use crate::pipeline::window_iter;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    pub freq_hz: f64,
    /// Frequency at the end of the recording; constant when absent.
    #[serde(default)]
    pub freq_end_hz: Option<f64>,
    pub amplitude: f64,
    /// Axes that see the tone.
    pub axes: Vec<AxisName>,
    /// FIR taps from the tone into the PPG.
    #[serde(default = "unit_coupling")]
    pub coupling: Vec<f64>,
}

fn unit_coupling() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_id")]
    pub subject_id: String,
    pub duration_s: f64,
    #[serde(default = "default_fs")]
    pub fs: f64,
    pub seed: u64,
    /// `[time_s, bpm]` knots, strictly increasing in time. Held constant
    /// outside the first and last knot.
    pub heart: Vec<[f64; 2]>,
    #[serde(default = "one")]
    pub heart_amplitude: f64,
    /// Relative amplitude of the second harmonic.
    #[serde(default)]
    pub heart_harmonic: f64,
    #[serde(default)]
    pub artifacts: Vec<Artifact>,
    /// Standard deviation of the white noise on each PPG channel.
    #[serde(default)]
    pub ppg_noise: f64,
    /// Standard deviation of the white noise on each accelerometer axis.
    #[serde(default)]
    pub accel_noise: f64,
    /// When set, artifacts and noise in the PPG are rescaled together so that
    /// heart power over interference power equals this value in dB.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_window")]
    pub window_s: f64,
    #[serde(default = "default_shift")]
    pub shift_s: f64,
}

fn default_id() -> String {
    "synth".into()
}
fn default_fs() -> f64 {
    125.0
}
fn one() -> f64 {
    1.0
}
fn default_window() -> f64 {
    8.0
}
fn default_shift() -> f64 {
    2.0
}

impl SynthSpec {
    /// Clean constant-rate heart, no artifacts or noise.
    pub fn constant(duration_s: f64, bpm: f64, seed: u64) -> Self {
        SynthSpec::ramp(duration_s, bpm, bpm, seed)
    }

    /// Clean linear ramp from `from` to `to` BPM over the full duration.
    pub fn ramp(duration_s: f64, from: f64, to: f64, seed: u64) -> Self {
        SynthSpec {
            subject_id: default_id(),
            duration_s,
            fs: default_fs(),
            seed,
            heart: vec![[0.0, from], [duration_s, to]],
            heart_amplitude: 1.0,
            heart_harmonic: 0.0,
            artifacts: Vec::new(),
            ppg_noise: 0.0,
            accel_noise: 0.0,
            snr_db: None,
            window_s: default_window(),
            shift_s: default_shift(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SynthSpec =
            toml::from_str(text).map_err(|e| Error::Parameter(format!("synth spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.fs > 0.0) {
            return param("duration and sampling rate must be positive");
        }
        if self.heart.is_empty() {
            return param("heart trajectory needs at least one knot");
        }
        for w in self.heart.windows(2) {
            if !(w[1][0] > w[0][0]) {
                return param("heart knot times must increase strictly");
            }
        }
        if let Some(k) = self.heart.iter().find(|k| !(24.0..=210.0).contains(&k[1])) {
            return param(format!("heart rate {} BPM outside [24, 210]", k[1]));
        }
        for a in &self.artifacts {
            let nyq = self.fs / 2.0;
            if !(a.freq_hz > 0.0 && a.freq_hz < nyq) || a.freq_end_hz.is_some_and(|f| !(f > 0.0 && f < nyq)) {
                return param(format!("artifact frequency {} Hz outside (0, {nyq})", a.freq_hz));
            }
            if a.coupling.is_empty() {
                return param("artifact coupling needs at least one tap");
            }
        }
        if self.ppg_noise < 0.0 || self.accel_noise < 0.0 {
            return param("noise levels must be non-negative");
        }
        Ok(())
    }

    /// Heart rate at time `t` seconds.
    pub fn bpm_at(&self, t: f64) -> f64 {
        let k = &self.heart;
        if t <= k[0][0] {
            return k[0][1];
        }
        for w in k.windows(2) {
            if t <= w[1][0] {
                let a = (t - w[0][0]) / (w[1][0] - w[0][0]);
                return w[0][1] + a * (w[1][1] - w[0][1]);
            }
        }
        k[k.len() - 1][1]
    }
}

fn sweep_phase(f0: f64, f1: f64, duration: f64, t: f64) -> f64 {
    // integral of a linear frequency sweep
    TAU * (f0 * t + 0.5 * (f1 - f0) / duration * t * t)
}

/// Generates the recording described by `spec`, with the window-mean BPM of
/// the trajectory as ground truth.
pub fn synth_recording(spec: &SynthSpec) -> Result<Recording> {
    spec.validate()?;
    let fs = spec.fs;
    let n = (spec.duration_s * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let bpm: Vec<f64> = (0..n).map(|i| spec.bpm_at(i as f64 / fs)).collect();
    let mut heart = Vec::with_capacity(n);
    let mut phase = 0.0_f64;
    for &b in &bpm {
        heart.push(spec.heart_amplitude * (phase.sin() + spec.heart_harmonic * (2.0 * phase).sin()));
        phase += TAU * b / 60.0 / fs;
    }

    let mut interference = vec![0.0; n];
    let mut accel = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for a in &spec.artifacts {
        let f1 = a.freq_end_hz.unwrap_or(a.freq_hz);
        let tone = |i: isize| a.amplitude * sweep_phase(a.freq_hz, f1, spec.duration_s, i as f64 / fs).sin();
        for i in 0..n {
            let mut acc = 0.0;
            for (j, h) in a.coupling.iter().enumerate() {
                acc += h * tone(i as isize - j as isize);
            }
            interference[i] += acc;
        }
        for ax in &a.axes {
            let slot = match ax {
                AxisName::X => 0,
                AxisName::Y => 1,
                AxisName::Z => 2,
            };
            for (i, v) in accel[slot].iter_mut().enumerate() {
                *v += tone(i as isize);
            }
        }
    }

    let normal = |sd: f64| Normal::new(0.0, sd).map_err(|e| Error::Parameter(e.to_string()));
    let ppg_n = normal(spec.ppg_noise)?;
    let acc_n = normal(spec.accel_noise)?;
    let noise1: Vec<f64> = (0..n).map(|_| ppg_n.sample(&mut rng)).collect();
    let noise2: Vec<f64> = (0..n).map(|_| ppg_n.sample(&mut rng)).collect();
    for ch in accel.iter_mut() {
        for v in ch.iter_mut() {
            *v += acc_n.sample(&mut rng);
        }
    }

    let scale = match spec.snr_db {
        Some(db) => {
            let ph = heart.iter().map(|v| v * v).sum::<f64>();
            let pi = interference
                .iter()
                .zip(noise1.iter().zip(&noise2))
                .map(|(s, (a, b))| 0.5 * ((s + a).powi(2) + (s + b).powi(2)))
                .sum::<f64>();
            if pi > 0.0 {
                (ph / pi / 10f64.powf(db / 10.0)).sqrt()
            } else {
                1.0
            }
        }
        None => 1.0,
    };
    let ppg1: Vec<f64> = (0..n).map(|i| heart[i] + scale * (interference[i] + noise1[i])).collect();
    let ppg2: Vec<f64> = (0..n).map(|i| heart[i] + scale * (interference[i] + noise2[i])).collect();

    let truth: Vec<f64> = window_iter(n, fs, spec.window_s, spec.shift_s)?
        .map(|r| {
            let len = r.len() as f64;
            bpm[r].iter().sum::<f64>() / len
        })
        .collect();
    let [ax, ay, az] = accel;
    Recording::from_channels(spec.subject_id.clone(), [ppg1, ppg2, ax, ay, az], fs)?.with_ground_truth(
        truth,
        spec.window_s,
        spec.shift_s,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{periodogram, Signal};

    const SPEC: &str = r#"
subject_id = "toml"
duration_s = 30
seed = 7
heart = [[0, 80], [30, 110]]
ppg_noise = 0.1
accel_noise = 0.05

[[artifacts]]
freq_hz = 2.2
amplitude = 1.5
axes = ["x"]
coupling = [0.9, 0.4, -0.2]
"#;

    #[test]
    fn parses_toml() {
        let s = SynthSpec::from_toml(SPEC).unwrap();
        assert_eq!(s.subject_id, "toml");
        assert_eq!(s.fs, 125.0);
        assert_eq!(s.artifacts[0].axes, vec![AxisName::X]);
        assert!(SynthSpec::from_toml("duration_s = 1\nseed = 1\nheart = [[0, 300]]\n").is_err());
        assert!(SynthSpec::from_toml("duration_s = 1\nseed = 1\nheart = [[0, 80]]\nbogus = 1\n").is_err());
    }

    #[test]
    fn trajectory_interpolates() {
        let s = SynthSpec {
            heart: vec![[0.0, 60.0], [10.0, 80.0], [20.0, 70.0]],
            ..SynthSpec::constant(20.0, 60.0, 0)
        };
        assert_eq!(s.bpm_at(-1.0), 60.0);
        assert_eq!(s.bpm_at(5.0), 70.0);
        assert_eq!(s.bpm_at(15.0), 75.0);
        assert_eq!(s.bpm_at(25.0), 70.0);
    }

    #[test]
    fn clean_windows_peak_at_truth() {
        let rec = synth_recording(&SynthSpec::ramp(60.0, 70.0, 100.0, 1)).unwrap();
        let truth = rec.ground_truth.clone().unwrap();
        assert_eq!(truth.len(), 27);
        let bin = 60.0 * 125.0 / 4096.0;
        for (k, r) in window_iter(rec.len(), 125.0, 8.0, 2.0).unwrap().enumerate() {
            let s = periodogram(&rec.ppg1.slice(r.start, r.end).unwrap(), 4096).unwrap();
            let p = s.band_argmax(0.4, 3.5).unwrap();
            assert!((p.bpm - truth[k]).abs() <= bin, "window {k}: {} vs {}", p.bpm, truth[k]);
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let s = SynthSpec::from_toml(SPEC).unwrap();
        let a = synth_recording(&s).unwrap();
        let b = synth_recording(&s).unwrap();
        assert_eq!(a, b);
        let c = synth_recording(&SynthSpec { seed: 8, ..s }).unwrap();
        assert_ne!(a.ppg1, c.ppg1);
    }

    #[test]
    fn artifact_only_on_assigned_axis() {
        let s = SynthSpec::from_toml(SPEC).unwrap();
        let rec = synth_recording(&s).unwrap();
        let spec_of = |sig: &Signal| periodogram(&sig.slice(0, 1000).unwrap(), 4096).unwrap();
        let k = (2.2 * 4096.0 / 125.0_f64).round() as usize;
        let x = spec_of(&rec.accel_x);
        assert!(x.band_argmax(0.4, 3.5).unwrap().index.abs_diff(k) <= 1);
        for other in [&rec.accel_y, &rec.accel_z] {
            let sp = spec_of(other);
            let floor = sp.power().iter().sum::<f64>() / sp.len() as f64;
            assert!(sp.power()[k] < 20.0 * floor, "artifact leaked: {} vs floor {floor}", sp.power()[k]);
        }
    }

    #[test]
    fn snr_scaling() {
        let mut s = SynthSpec::from_toml(SPEC).unwrap();
        s.snr_db = Some(0.0);
        let rec = synth_recording(&s).unwrap();
        let clean = synth_recording(&SynthSpec {
            artifacts: vec![],
            ppg_noise: 0.0,
            snr_db: None,
            ..s.clone()
        })
        .unwrap();
        let ph: f64 = clean.ppg1.energy() + clean.ppg2.energy();
        let pi: f64 = rec
            .ppg1
            .samples()
            .iter()
            .zip(clean.ppg1.samples())
            .chain(rec.ppg2.samples().iter().zip(clean.ppg2.samples()))
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        assert!((10.0 * (ph / pi).log10()).abs() < 1e-9);
    }
}
