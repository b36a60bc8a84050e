//! Per-recording heart-rate estimation.

use std::ops::Range;
use std::time::Instant;

use crate::adaptive::{cascade_filter, Algorithm, CascadeConfig};
use crate::dsp::{average_channels, bandpass_spectral, normalize_energy, periodogram, Signal, Spectrum};
use crate::error::{param, Error, Result};
use crate::fusion::{conditional_sum, spectrum_argmax_bpm, Branch, FusionInput};
use crate::io::Recording;
use crate::ssa::{group_components, reject_motion_components, ssa_decompose_leading};
use crate::tracker::{Tracker, TrackerParams};

/// Processing chain variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// SSA output straight to the tracker.
    C1SsaOnly,
    /// Cascade output straight to the tracker.
    C2RlsOnly,
    /// LMS cascade, SSA and conditional sum.
    C3LmsSsa,
    /// RLS cascade, SSA and conditional sum.
    C4RlsSsa,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::C1SsaOnly, Mode::C2RlsOnly, Mode::C3LmsSsa, Mode::C4RlsSsa];

    pub fn label(self) -> &'static str {
        match self {
            Mode::C1SsaOnly => "C1",
            Mode::C2RlsOnly => "C2",
            Mode::C3LmsSsa => "C3",
            Mode::C4RlsSsa => "C4",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Mode::C1SsaOnly => "SSA + tracking",
            Mode::C2RlsOnly => "RLS + tracking",
            Mode::C3LmsSsa => "LMS + SSA + tracking",
            Mode::C4RlsSsa => "RLS + SSA + tracking",
        }
    }

    fn uses_cascade(self) -> bool {
        self != Mode::C1SsaOnly
    }

    fn uses_ssa(self) -> bool {
        self != Mode::C2RlsOnly
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "").as_str() {
            "C1" => Ok(Mode::C1SsaOnly),
            "C2" => Ok(Mode::C2RlsOnly),
            "C3" => Ok(Mode::C3LmsSsa),
            "C4" => Ok(Mode::C4RlsSsa),
            _ => param(format!("unknown mode `{s}` (expected C1, C2, C3 or C4)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsaParams {
    /// Embedding dimension L.
    pub window: usize,
    /// Fraction of squared singular-value mass kept.
    pub retained_mass: f64,
    /// Grouping tolerance in spectral bins.
    pub group_tolerance_bins: f64,
    /// Protection radius around the previous estimate, BPM.
    pub delta_bpm: f64,
}

impl Default for SsaParams {
    fn default() -> Self {
        SsaParams {
            window: 400,
            retained_mass: 0.99,
            group_tolerance_bins: 2.0,
            delta_bpm: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub window_seconds: f64,
    pub shift_seconds: f64,
    /// Pass band in Hz, used for preprocessing and every peak search.
    pub band: (f64, f64),
    pub n_fft: usize,
    pub mode: Mode,
    /// Cascade settings. The algorithm field is overridden by `mode`.
    pub cascade: CascadeConfig,
    pub tracker: TrackerParams,
    pub ssa: SsaParams,
    /// Fusion agreement threshold, BPM.
    pub epsilon: f64,
    /// One-sided fusion test.
    pub signed_fusion: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window_seconds: 8.0,
            shift_seconds: 2.0,
            band: (0.4, 3.5),
            n_fft: 4096,
            mode: Mode::C4RlsSsa,
            cascade: CascadeConfig::default(),
            tracker: TrackerParams::default(),
            ssa: SsaParams::default(),
            epsilon: 15.0,
            signed_fusion: false,
        }
    }
}

impl PipelineConfig {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window_seconds > 0.0 && self.shift_seconds > 0.0) {
            return param("window and shift must be positive");
        }
        if self.shift_seconds > self.window_seconds {
            return param(format!(
                "shift {} s exceeds window {} s",
                self.shift_seconds, self.window_seconds
            ));
        }
        if !(self.band.0 >= 0.0 && self.band.1 > self.band.0) {
            return param(format!("invalid band [{}, {}] Hz", self.band.0, self.band.1));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return param(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if !(self.ssa.retained_mass > 0.0 && self.ssa.retained_mass <= 1.0) {
            return param(format!("retained mass must be in (0, 1], got {}", self.ssa.retained_mass));
        }
        if !(self.ssa.delta_bpm >= 0.0 && self.ssa.group_tolerance_bins >= 0.0) {
            return param("SSA tolerances must be non-negative");
        }
        self.cascade_for_mode().validate()?;
        self.tracker.validate()
    }

    fn cascade_for_mode(&self) -> CascadeConfig {
        let mut c = self.cascade.clone();
        c.algorithm = if self.mode == Mode::C3LmsSsa {
            Algorithm::Lms
        } else {
            Algorithm::Rls
        };
        c
    }

    fn tracker_params(&self) -> TrackerParams {
        TrackerParams {
            band: self.band,
            ..self.tracker.clone()
        }
    }
}

fn samples_for(seconds: f64, fs: f64, what: &str) -> Result<usize> {
    let n = seconds * fs;
    let r = n.round();
    if !(r >= 1.0) || (n - r).abs() > 1e-6 {
        return param(format!("{what} of {seconds} s is not a whole number of samples at {fs} Hz"));
    }
    Ok(r as usize)
}

/// Number of complete windows in `n` samples.
pub fn window_count(n: usize, fs: f64, window_s: f64, shift_s: f64) -> Result<usize> {
    Ok(window_iter(n, fs, window_s, shift_s)?.len())
}

/// Sample ranges of consecutive windows starting at multiples of the shift.
/// A trailing partial window is dropped.
pub fn window_iter(
    n: usize,
    fs: f64,
    window_s: f64,
    shift_s: f64,
) -> Result<impl ExactSizeIterator<Item = Range<usize>>> {
    let w = samples_for(window_s, fs, "window")?;
    let s = samples_for(shift_s, fs, "shift")?;
    if s > w {
        return param(format!("shift {shift_s} s exceeds window {window_s} s"));
    }
    let count = if n >= w { (n - w) / s + 1 } else { 0 };
    Ok((0..count).map(move |k| k * s..k * s + w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    /// 1-based.
    pub window_index: usize,
    pub b_est: f64,
    pub b_true: Option<f64>,
    pub branch: Branch,
    /// Wall-clock processing time.
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTrace {
    pub subject_id: String,
    pub mode: Mode,
    pub records: Vec<WindowRecord>,
}

impl EstimateTrace {
    pub fn estimates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.b_est).collect()
    }

    /// Ground truth per window, if every window has one.
    pub fn truth(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.b_true).collect()
    }

    pub fn median_ms(&self) -> f64 {
        median(self.records.iter().map(|r| r.ms).collect())
    }

    /// True when traces agree in everything except timing.
    pub fn same_estimates(&self, other: &EstimateTrace) -> bool {
        self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| {
                a.window_index == b.window_index
                    && a.b_est.to_bits() == b.b_est.to_bits()
                    && a.b_true.map(f64::to_bits) == b.b_true.map(f64::to_bits)
                    && a.branch == b.branch
            })
    }
}

pub(crate) fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Preprocessed channels of one window.
struct Window {
    ppg: Signal,
    ax: Signal,
    ay: Signal,
    az: Signal,
}

fn prepare(rec: &Recording, range: Range<usize>, band: (f64, f64)) -> Result<Window> {
    let bp = |s: &Signal| bandpass_spectral(&s.slice(range.start, range.end)?, band.0, band.1);
    let p1 = bp(&rec.ppg1)?;
    let p2 = bp(&rec.ppg2)?;
    Ok(Window {
        ppg: average_channels(&p1, &p2)?,
        ax: bp(&rec.accel_x)?,
        ay: bp(&rec.accel_y)?,
        az: bp(&rec.accel_z)?,
    })
}

fn ssa_branch(w: &Window, cfg: &PipelineConfig, prev: Option<f64>) -> Result<Signal> {
    let dec = ssa_decompose_leading(&w.ppg, cfg.ssa.window, cfg.ssa.retained_mass)?;
    let bin = 60.0 * w.ppg.fs() / cfg.n_fft as f64;
    let groups = group_components(&dec, cfg.ssa.group_tolerance_bins * bin, cfg.ssa.retained_mass, cfg.n_fft)?;
    let spectra: Vec<Spectrum> = [&w.ax, &w.ay, &w.az]
        .into_iter()
        .map(|a| periodogram(a, cfg.n_fft))
        .collect::<Result<_>>()?;
    reject_motion_components(&groups, &spectra, prev, cfg.ssa.delta_bpm, w.ppg.fs())
}

/// Estimates one BPM value per window.
pub fn run_recording(rec: &Recording, cfg: &PipelineConfig) -> Result<EstimateTrace> {
    cfg.validate()?;
    let windows: Vec<Range<usize>> =
        window_iter(rec.len(), rec.fs(), cfg.window_seconds, cfg.shift_seconds)?.collect();
    if windows.is_empty() {
        return param(format!(
            "recording `{}` lasts {:.2} s, shorter than one {} s window",
            rec.subject_id,
            rec.duration_seconds(),
            cfg.window_seconds
        ));
    }
    if let Some(t) = &rec.ground_truth {
        if t.len() != windows.len() {
            return Err(Error::Alignment {
                expected: windows.len(),
                actual: t.len(),
            });
        }
    }

    let cascade = cfg.cascade_for_mode();
    let mut tracker = Tracker::new(cfg.tracker_params())?;
    let mut prev: Option<f64> = None;
    let mut records = Vec::with_capacity(windows.len());
    for (k, range) in windows.into_iter().enumerate() {
        let start = Instant::now();
        let w = prepare(rec, range, cfg.band)?;
        let x_r = if cfg.mode.uses_cascade() {
            Some(cascade_filter(&w.ppg, &w.ax, &w.ay, &w.az, &cascade)?)
        } else {
            None
        };
        let x_s = if cfg.mode.uses_ssa() {
            Some(ssa_branch(&w, cfg, prev)?)
        } else {
            None
        };
        let (fused, branch) = match (&x_r, &x_s) {
            (Some(r), Some(s)) => {
                let ssa_bpm = if s.energy() > 0.0 {
                    spectrum_argmax_bpm(s, cfg.n_fft, cfg.band.0, cfg.band.1).unwrap_or(f64::NAN)
                } else {
                    f64::NAN
                };
                let f = conditional_sum(&FusionInput {
                    rls: r,
                    ssa: s,
                    ssa_bpm,
                    prev_bpm: prev,
                    epsilon: cfg.epsilon,
                    window_index: k + 1,
                    signed: cfg.signed_fusion,
                })?;
                (f.signal, f.branch)
            }
            (Some(r), None) => (normalize_energy(r)?, Branch::Rls),
            (None, Some(s)) => (normalize_energy(s)?, Branch::Ssa),
            (None, None) => unreachable!("every mode uses at least one branch"),
        };
        let spectrum = periodogram(&fused, cfg.n_fft)?;
        let b_est = tracker.update(&spectrum)?;
        prev = Some(b_est);
        records.push(WindowRecord {
            window_index: k + 1,
            b_est,
            b_true: rec.ground_truth.as_ref().map(|t| t[k]),
            branch,
            ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(EstimateTrace {
        subject_id: rec.subject_id.clone(),
        mode: cfg.mode,
        records,
    })
}
