//! Shared signal primitives: the `Signal` and `Spectrum` carriers, transform-domain
//! bandpass, zero-padded periodogram, peak picking and energy normalization.
//!
//! Spectral bins are addressed two ways. Inside a [`Spectrum`] an `index` is the
//! 0-based position in `power` (frequency `index * fs / n_fft`). The free functions
//! [`bin_to_bpm`] and [`bpm_to_nearest_bin`] use the 1-based bin numbering of the
//! heart-rate formula, so `bin = index + 1`.

use std::cell::RefCell;
use std::ops::RangeInclusive;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{param, Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

fn inverse_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// A uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    fs: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return param(format!("sampling rate must be positive, got {fs}"));
        }
        if samples.is_empty() {
            return param("signal has no samples");
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("sample {i} is {}", samples[i])));
        }
        Ok(Self { samples, fs })
    }

    /// All-zero signal of the given length.
    pub fn zeros(len: usize, fs: f64) -> Result<Self> {
        Self::new(vec![0.0; len], fs)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    pub fn rms(&self) -> f64 {
        (self.energy() / self.len() as f64).sqrt()
    }

    /// Samples `start..end` as a new signal at the same rate.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return param(format!(
                "slice {start}..{end} out of range for length {}",
                self.len()
            ));
        }
        Ok(Self {
            samples: self.samples[start..end].to_vec(),
            fs: self.fs,
        })
    }

    /// Replaces the samples, keeping the rate. Used internally where the
    /// values are known finite.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), self.len());
        Self {
            samples,
            fs: self.fs,
        }
    }
}

/// One-sided periodogram power `|X[k]|^2` for `k = 0..=n_fft/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    power: Vec<f64>,
    n_fft: usize,
    fs: f64,
}

impl Spectrum {
    pub fn new(power: Vec<f64>, n_fft: usize, fs: f64) -> Result<Self> {
        if n_fft == 0 || power.len() != n_fft / 2 + 1 {
            return param(format!(
                "spectrum length {} inconsistent with n_fft {n_fft}",
                power.len()
            ));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return param(format!("sampling rate must be positive, got {fs}"));
        }
        if power.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Numeric("spectrum power must be finite and >= 0".into()));
        }
        Ok(Self { power, n_fft, fs })
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// BPM represented by 0-based `index`.
    pub fn bpm_at(&self, index: usize) -> f64 {
        index as f64 * 60.0 * self.fs / self.n_fft as f64
    }

    /// Spacing between adjacent bins, in BPM.
    pub fn bin_width_bpm(&self) -> f64 {
        60.0 * self.fs / self.n_fft as f64
    }

    /// 0-based index closest to `bpm`, clipped to the spectrum.
    pub fn nearest_index(&self, bpm: f64) -> usize {
        let k = (bpm / self.bin_width_bpm()).round();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.len() - 1)
        }
    }

    /// Indices whose frequencies fall inside `[f_lo, f_hi]` Hz. May be empty
    /// (start > end) for a band narrower than one bin.
    pub fn band_indices(&self, f_lo: f64, f_hi: f64) -> RangeInclusive<usize> {
        let scale = self.n_fft as f64 / self.fs;
        let lo = (f_lo * scale - 1e-9).ceil().max(0.0) as usize;
        let hi = ((f_hi * scale + 1e-9).floor().max(0.0) as usize).min(self.len() - 1);
        lo..=hi
    }

    /// Highest-power bin inside `[f_lo, f_hi]` Hz; ties go to the lowest bin.
    /// `None` when every in-band bin is zero.
    pub fn band_argmax(&self, f_lo: f64, f_hi: f64) -> Option<Peak> {
        let mut best: Option<usize> = None;
        for k in self.band_indices(f_lo, f_hi) {
            if self.power[k] > best.map_or(0.0, |b| self.power[b]) {
                best = Some(k);
            }
        }
        best.map(|k| self.peak_at(k))
    }

    pub fn peak_at(&self, index: usize) -> Peak {
        Peak {
            index,
            bpm: self.bpm_at(index),
            power: self.power[index],
        }
    }
}

/// A spectral peak. `index` is 0-based into [`Spectrum::power`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub bpm: f64,
    pub power: f64,
}

/// Zeroes every transform bin outside `[f_lo, f_hi]` Hz and transforms back.
///
/// Band edges snap to the nearest bin of the signal-length transform. Positive
/// and negative frequencies are treated symmetrically so the result stays real.
pub fn bandpass_spectral(x: &Signal, f_lo: f64, f_hi: f64) -> Result<Signal> {
    let fs = x.fs();
    if !(f_lo >= 0.0 && f_lo < f_hi && f_hi <= fs / 2.0) {
        return param(format!(
            "band [{f_lo}, {f_hi}] Hz invalid for fs = {fs} Hz"
        ));
    }
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.samples().iter().map(|&v| Complex::new(v, 0.0)).collect();
    forward_plan(n).process(&mut buf);

    let scale = n as f64 / fs;
    let k_lo = (f_lo * scale).round() as usize;
    let k_hi = (f_hi * scale).round() as usize;
    for (k, c) in buf.iter_mut().enumerate() {
        let folded = k.min(n - k);
        if folded < k_lo || folded > k_hi {
            *c = Complex::new(0.0, 0.0);
        }
    }

    inverse_plan(n).process(&mut buf);
    let inv = 1.0 / n as f64;
    Ok(x.with_samples(buf.iter().map(|c| c.re * inv).collect()))
}

/// Elementwise mean of two equally long, equally sampled channels.
pub fn average_channels(a: &Signal, b: &Signal) -> Result<Signal> {
    if a.len() != b.len() {
        return param(format!("channel lengths differ: {} vs {}", a.len(), b.len()));
    }
    if a.fs() != b.fs() {
        return param(format!("sampling rates differ: {} vs {}", a.fs(), b.fs()));
    }
    let avg = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(p, q)| 0.5 * (p + q))
        .collect();
    Ok(a.with_samples(avg))
}

/// Rectangular-window periodogram of the mean-removed signal zero-padded to
/// `n_fft` points.
pub fn periodogram(x: &Signal, n_fft: usize) -> Result<Spectrum> {
    if !n_fft.is_power_of_two() {
        return param(format!("n_fft must be a power of two, got {n_fft}"));
    }
    if n_fft < x.len() {
        return param(format!(
            "n_fft {n_fft} is shorter than the signal ({} samples)",
            x.len()
        ));
    }
    let mean = x.samples().iter().sum::<f64>() / x.len() as f64;
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    for (slot, &v) in buf.iter_mut().zip(x.samples()) {
        slot.re = v - mean;
    }
    forward_plan(n_fft).process(&mut buf);
    let power = buf[..=n_fft / 2].iter().map(|c| c.norm_sqr()).collect();
    Spectrum::new(power, n_fft, x.fs())
}

/// BPM of the 1-based bin number `bin`: `(bin - 1) / n_fft * 60 * fs`.
pub fn bin_to_bpm(bin: usize, n_fft: usize, fs: f64) -> f64 {
    debug_assert!(bin >= 1 && bin <= n_fft / 2 + 1);
    (bin as f64 - 1.0) / n_fft as f64 * 60.0 * fs
}

/// Inverse of [`bin_to_bpm`]: nearest 1-based bin number for `bpm`.
pub fn bpm_to_nearest_bin(bpm: f64, n_fft: usize, fs: f64) -> usize {
    let k = (bpm * n_fft as f64 / (60.0 * fs)).round().max(0.0) as usize;
    k.min(n_fft / 2) + 1
}

/// Local maxima whose power exceeds `ratio` times the global maximum, strongest
/// first.
///
/// A maximum is a run of equal values whose neighbours on both sides are
/// strictly lower (spectrum edges count as lower). A plateau reports its
/// lowest bin.
pub fn dominant_peaks(s: &Spectrum, ratio: f64) -> Result<Vec<Peak>> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return param(format!("peak ratio must be in (0, 1], got {ratio}"));
    }
    let p = s.power();
    if p.is_empty() {
        return param("empty spectrum");
    }
    let max = p.iter().cloned().fold(0.0, f64::max);
    let threshold = ratio * max;

    let mut peaks = Vec::new();
    let mut start = 0;
    while start < p.len() {
        let mut end = start;
        while end + 1 < p.len() && p[end + 1] == p[start] {
            end += 1;
        }
        let left_lower = start == 0 || p[start - 1] < p[start];
        let right_lower = end + 1 == p.len() || p[end + 1] < p[start];
        if left_lower && right_lower && p[start] > threshold {
            peaks.push(s.peak_at(start));
        }
        start = end + 1;
    }
    peaks.sort_by(|a, b| b.power.total_cmp(&a.power).then(a.index.cmp(&b.index)));
    Ok(peaks)
}

/// Scales `x` to unit energy.
pub fn normalize_energy(x: &Signal) -> Result<Signal> {
    let energy = x.energy();
    if energy <= 0.0 {
        return Err(Error::Degenerate("cannot normalize a zero-energy signal".into()));
    }
    let g = 1.0 / energy.sqrt();
    Ok(x.with_samples(x.samples().iter().map(|v| v * g).collect()))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    pub(crate) fn tone(freq: f64, amp: f64, n: usize, fs: f64) -> Vec<f64> {
        (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / fs).sin())
            .collect()
    }

    fn sig(v: Vec<f64>, fs: f64) -> Signal {
        Signal::new(v, fs).unwrap()
    }

    fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
        let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        (s / a.len() as f64).sqrt()
    }

    /// Direct O(n^2) DFT power of the mean-removed, zero-padded input.
    pub(crate) fn direct_dft_power(x: &[f64], n_fft: usize) -> Vec<f64> {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        (0..=n_fft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, v) in x.iter().enumerate() {
                    let ang = -2.0 * PI * (k * n) as f64 / n_fft as f64;
                    re += (v - mean) * ang.cos();
                    im += (v - mean) * ang.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    #[test]
    fn bandpass_keeps_in_band_tone() {
        let x = tone(2.0, 1.0, 1000, 125.0);
        let y = bandpass_spectral(&sig(x.clone(), 125.0), 0.4, 3.5).unwrap();
        assert!(rms_diff(&x, y.samples()) < 1e-6);
    }

    #[test]
    fn bandpass_removes_out_of_band_tone() {
        // 10 s so that 0.1 Hz lands exactly on bin 1
        let x = tone(0.1, 1.0, 1250, 125.0);
        let input = sig(x, 125.0);
        let y = bandpass_spectral(&input, 0.4, 3.5).unwrap();
        assert!(y.rms() < 1e-6 * input.rms());
    }

    #[test]
    fn bandpass_is_linear_over_components() {
        let slow = tone(0.1, 1.0, 1250, 125.0);
        let fast = tone(2.0, 0.7, 1250, 125.0);
        let mix: Vec<f64> = slow.iter().zip(&fast).map(|(a, b)| a + b).collect();
        let y = bandpass_spectral(&sig(mix, 125.0), 0.4, 3.5).unwrap();
        assert!(rms_diff(&fast, y.samples()) < 1e-6);
    }

    #[test]
    fn bandpass_rejects_bad_edges() {
        let x = sig(vec![0.0; 16], 125.0);
        assert!(bandpass_spectral(&x, 3.5, 0.4).is_err());
        assert!(bandpass_spectral(&x, -1.0, 3.5).is_err());
        assert!(bandpass_spectral(&x, 0.4, 70.0).is_err());
    }

    #[test]
    fn averaging() {
        let a = sig(vec![1.0, 2.0], 125.0);
        let b = sig(vec![3.0, 4.0], 125.0);
        assert_eq!(average_channels(&a, &b).unwrap().samples(), &[2.0, 3.0]);
        assert_eq!(average_channels(&a, &a).unwrap(), a);
        let neg = sig(vec![-1.0, -2.0], 125.0);
        assert!(average_channels(&a, &neg).unwrap().samples().iter().all(|v| *v == 0.0));
        assert!(average_channels(&a, &sig(vec![1.0], 125.0)).is_err());
    }

    #[test]
    fn periodogram_of_constant_is_empty() {
        let s = periodogram(&sig(vec![3.25; 1000], 125.0), 4096).unwrap();
        assert!(s.power().iter().all(|p| *p <= 1e-12));
    }

    #[test]
    fn periodogram_matches_direct_dft() {
        let x = tone(2.0, 1.0, 1000, 125.0);
        let s = periodogram(&sig(x.clone(), 125.0), 4096).unwrap();
        let oracle = direct_dft_power(&x, 4096);
        let scale = oracle.iter().cloned().fold(0.0, f64::max);
        for (a, b) in s.power().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-9 * scale);
        }
        let arg = s.band_argmax(0.0, 62.5).unwrap();
        assert!((arg.bpm - 120.0).abs() <= s.bin_width_bpm());
    }

    #[test]
    fn periodogram_preserves_amplitude_order() {
        let a = tone(1.0, 1.0, 1000, 125.0);
        let b = tone(2.0, 2.0, 1000, 125.0);
        let x: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
        let s = periodogram(&sig(x.clone(), 125.0), 4096).unwrap();
        let k1 = s.nearest_index(60.0);
        let k2 = s.nearest_index(120.0);
        assert!(s.power()[k2] > s.power()[k1]);
        let oracle = direct_dft_power(&x, 4096);
        assert!(oracle[k2] > oracle[k1]);
    }

    #[test]
    fn periodogram_rejects_short_or_odd_n_fft() {
        let x = sig(vec![1.0; 1000], 125.0);
        assert!(periodogram(&x, 512).is_err());
        assert!(periodogram(&x, 3000).is_err());
    }

    #[test]
    fn bin_mapping() {
        assert_eq!(bin_to_bpm(1, 4096, 125.0), 0.0);
        assert_eq!(bin_to_bpm(1, 1024, 50.0), 0.0);
        let b = bin_to_bpm(69, 4096, 125.0);
        assert!((b - 68.0 / 4096.0 * 7500.0).abs() < 1e-12);
        assert!((b - 124.51).abs() < 0.01);
        for k in 1..=2049 {
            assert_eq!(bpm_to_nearest_bin(bin_to_bpm(k, 4096, 125.0), 4096, 125.0), k);
            if k > 1 {
                assert!(bin_to_bpm(k, 4096, 125.0) > bin_to_bpm(k - 1, 4096, 125.0));
            }
        }
    }

    #[test]
    fn single_tone_has_one_dominant_peak() {
        let x = tone(2.0, 1.0, 1000, 125.0);
        let s = periodogram(&sig(x, 125.0), 4096).unwrap();
        let peaks = dominant_peaks(&s, 0.5).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].bpm - 120.0).abs() <= s.bin_width_bpm());
    }

    #[test]
    fn weak_tone_is_not_dominant() {
        let a = tone(1.0, 0.1, 1000, 125.0);
        let b = tone(2.0, 1.0, 1000, 125.0);
        let x: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
        let s = periodogram(&sig(x, 125.0), 4096).unwrap();
        let peaks = dominant_peaks(&s, 0.5).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].bpm - 120.0).abs() <= s.bin_width_bpm());
    }

    #[test]
    fn flat_zero_spectrum_has_no_peaks() {
        let s = Spectrum::new(vec![0.0; 2049], 4096, 125.0).unwrap();
        assert!(dominant_peaks(&s, 0.5).unwrap().is_empty());
    }

    #[test]
    fn plateau_reports_lowest_bin() {
        let s = Spectrum::new(vec![0.0, 1.0, 5.0, 5.0, 1.0, 2.0, 5.0, 5.0, 7.0], 16, 125.0)
            .unwrap();
        let peaks = dominant_peaks(&s, 0.5).unwrap();
        let idx: Vec<usize> = peaks.iter().map(|p| p.index).collect();
        assert_eq!(idx, vec![8, 2]);
    }

    #[test]
    fn energy_normalization() {
        let y = normalize_energy(&sig(vec![3.0, 4.0], 1.0)).unwrap();
        assert!((y.samples()[0] - 0.6).abs() < 1e-12 && (y.samples()[1] - 0.8).abs() < 1e-12);
        let z = normalize_energy(&y).unwrap();
        assert!(rms_diff(y.samples(), z.samples()) < 1e-12);
        let a = normalize_energy(&sig(vec![1.0, -2.0, 0.5], 1.0)).unwrap();
        let b = normalize_energy(&sig(vec![5.0, -10.0, 2.5], 1.0)).unwrap();
        assert!(rms_diff(a.samples(), b.samples()) < 1e-12);
        assert!(matches!(
            normalize_energy(&sig(vec![0.0; 4], 1.0)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn signal_validation() {
        assert!(Signal::new(vec![], 125.0).is_err());
        assert!(Signal::new(vec![1.0], 0.0).is_err());
        assert!(matches!(Signal::new(vec![f64::NAN], 1.0), Err(Error::Numeric(_))));
    }

    fn random_signal() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0f64..100.0, 16..600)
    }

    proptest! {
        #[test]
        fn bandpass_is_idempotent(x in random_signal()) {
            let s = sig(x, 125.0);
            let once = bandpass_spectral(&s, 0.4, 3.5).unwrap();
            let twice = bandpass_spectral(&once, 0.4, 3.5).unwrap();
            prop_assert!(rms_diff(once.samples(), twice.samples()) < 1e-9);
        }

        #[test]
        fn parseval(x in random_signal()) {
            let s = sig(x.clone(), 125.0);
            let spec = periodogram(&s, 1024).unwrap();
            let p = spec.power();
            let last = p.len() - 1;
            let total: f64 = p.iter().enumerate()
                .map(|(k, v)| if k == 0 || k == last { *v } else { 2.0 * v })
                .sum();
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            let energy: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
            prop_assert!((total - 1024.0 * energy).abs() <= 1e-6 * (1024.0 * energy).max(1e-300));
        }

        #[test]
        fn dominant_peaks_match_exhaustive_scan(x in random_signal(), ratio in 0.05f64..1.0) {
            let spec = periodogram(&sig(x, 125.0), 1024).unwrap();
            let p = spec.power();
            let max = p.iter().cloned().fold(0.0, f64::max);
            let peaks = dominant_peaks(&spec, ratio).unwrap();
            for pk in &peaks {
                prop_assert!(pk.power > ratio * max);
                let k = pk.index;
                prop_assert!(k == 0 || p[k - 1] < p[k]);
                let mut j = k;
                while j + 1 < p.len() && p[j + 1] == p[k] { j += 1; }
                prop_assert!(j + 1 == p.len() || p[j + 1] < p[k]);
            }
            // every strict interior maximum above threshold is reported
            for k in 1..p.len() - 1 {
                if p[k] > p[k - 1] && p[k] > p[k + 1] && p[k] > ratio * max {
                    prop_assert!(peaks.iter().any(|pk| pk.index == k));
                }
            }
            prop_assert!(peaks.windows(2).all(|w| w[0].power >= w[1].power));
        }

        #[test]
        fn normalized_energy_is_one(x in random_signal()) {
            prop_assume!(x.iter().any(|v| *v != 0.0));
            let y = normalize_energy(&sig(x, 1.0)).unwrap();
            prop_assert!((y.energy() - 1.0).abs() <= 1e-12);
        }
    }
}
