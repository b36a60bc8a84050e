//! Heart-rate tracking over consecutive fused spectra.

use crate::dsp::Spectrum;
use crate::error::{param, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerParams {
    /// Half-width of the search region around the previous peak, in bins.
    pub delta_s: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Largest allowed increase per window, BPM.
    pub lambda_inc: f64,
    /// Largest allowed decrease per window, BPM.
    pub lambda_dec: f64,
    /// Heart-rate band in Hz.
    pub band: (f64, f64),
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams {
            delta_s: 10,
            alpha: 0.90,
            beta: 0.05,
            gamma: 0.05,
            lambda_inc: 5.0,
            lambda_dec: 3.0,
            band: (0.4, 3.5),
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.alpha, self.beta, self.gamma];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return param(format!("smoothing weights must be non-negative, got {weights:?}"));
        }
        if (self.alpha + self.beta + self.gamma - 1.0).abs() > 1e-9 {
            return param(format!(
                "smoothing weights must sum to 1, got {}",
                self.alpha + self.beta + self.gamma
            ));
        }
        if self.delta_s < 1 {
            return param("delta_s must be at least 1");
        }
        if !(self.lambda_inc > 0.0 && self.lambda_dec > 0.0) {
            return param(format!(
                "clamp limits must be positive, got inc={} dec={}",
                self.lambda_inc, self.lambda_dec
            ));
        }
        let (lo, hi) = self.band;
        if !(lo >= 0.0 && hi > lo) {
            return param(format!("invalid band [{lo}, {hi}] Hz"));
        }
        Ok(())
    }

    /// Largest per-window change the clamp permits.
    pub fn max_step(&self) -> f64 {
        self.lambda_inc.max(self.lambda_dec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerState {
    /// Previous estimate.
    pub b_minus1: f64,
    /// Estimate before that.
    pub b_minus2: f64,
    /// 0-based spectrum index of the previous peak.
    pub n0: usize,
    /// Windows processed so far.
    pub window_index: usize,
}

impl TrackerState {
    /// State after a single initial estimate.
    pub fn from_initial(bpm: f64, n0: usize) -> Self {
        TrackerState {
            b_minus1: bpm,
            b_minus2: bpm,
            n0,
            window_index: 1,
        }
    }

    fn push(&mut self, bpm: f64, n0: usize) {
        self.b_minus2 = self.b_minus1;
        self.b_minus1 = bpm;
        self.n0 = n0;
        self.window_index += 1;
    }
}

/// In-band argmax of `s`, as `(bpm, index)`.
pub fn initial_estimate(s: &Spectrum, band: (f64, f64)) -> Result<(f64, usize)> {
    s.band_argmax(band.0, band.1)
        .map(|p| (p.bpm, p.index))
        .ok_or_else(|| Error::Degenerate("spectrum has no in-band energy".into()))
}

/// Strongest bin within `delta_s` of `state.n0`, clipped to the band. Equal
/// maxima resolve to the bin nearest `n0`, then to the lower bin. Holds `n0`
/// when the region carries no power.
pub fn select_peak(s: &Spectrum, state: &TrackerState, delta_s: usize, band: (f64, f64)) -> (usize, f64) {
    let in_band = s.band_indices(band.0, band.1);
    let lo = state.n0.saturating_sub(delta_s).max(*in_band.start());
    let hi = (state.n0 + delta_s).min(*in_band.end());
    let p = s.power();
    let mut best: Option<usize> = None;
    for k in (lo..=hi).filter(|_| lo <= hi) {
        let better = match best {
            None => p[k] > 0.0,
            Some(b) => p[k] > p[b] || (p[k] == p[b] && k.abs_diff(state.n0) < b.abs_diff(state.n0)),
        };
        if better {
            best = Some(k);
        }
    }
    let n_cur = best.unwrap_or(state.n0);
    (n_cur, s.bpm_at(n_cur))
}

/// Three-point weighted average of the new raw estimate and the two previous
/// estimates.
pub fn smooth(b_hat: f64, state: &TrackerState, p: &TrackerParams) -> f64 {
    p.alpha * b_hat + p.beta * state.b_minus1 + p.gamma * state.b_minus2
}

/// Limits the change from the previous estimate to `+lambda_inc` / `-lambda_dec`.
pub fn clamp(b_prime: f64, state: &TrackerState, p: &TrackerParams) -> f64 {
    let d = b_prime - state.b_minus1;
    if d >= p.lambda_inc {
        state.b_minus1 + p.lambda_inc
    } else if d <= -p.lambda_dec {
        state.b_minus1 - p.lambda_dec
    } else {
        b_prime
    }
}

/// Peak selection, smoothing and clamping for one window. Updates `state` in
/// place and returns the new estimate.
pub fn track_window(s: &Spectrum, state: &mut TrackerState, p: &TrackerParams) -> f64 {
    let (_, b_hat) = select_peak(s, state, p.delta_s, p.band);
    let b_est = clamp(smooth(b_hat, state, p), state, p);
    let in_band = s.band_indices(p.band.0, p.band.1);
    let n0 = s.nearest_index(b_est).clamp(*in_band.start(), *in_band.end());
    state.push(b_est, n0);
    b_est
}

/// Runs the initial estimate on the first two windows and tracking afterwards.
#[derive(Debug, Clone)]
pub struct Tracker {
    params: TrackerParams,
    state: Option<TrackerState>,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Result<Self> {
        params.validate()?;
        Ok(Tracker { params, state: None })
    }

    pub fn params(&self) -> &TrackerParams {
        &self.params
    }

    pub fn state(&self) -> Option<&TrackerState> {
        self.state.as_ref()
    }

    /// Processes the next window's spectrum.
    pub fn update(&mut self, s: &Spectrum) -> Result<f64> {
        match &mut self.state {
            None => {
                let (bpm, n0) = initial_estimate(s, self.params.band)?;
                self.state = Some(TrackerState::from_initial(bpm, n0));
                Ok(bpm)
            }
            Some(state) if state.window_index < 2 => {
                let (bpm, n0) = initial_estimate(s, self.params.band)?;
                state.push(bpm, n0);
                Ok(bpm)
            }
            Some(state) => Ok(track_window(s, state, &self.params)),
        }
    }
}
