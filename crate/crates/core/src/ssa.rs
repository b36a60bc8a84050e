//! Singular spectrum analysis of a PPG window and removal of components that
//! share dominant frequencies with the accelerometer.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dsp::{dominant_peaks, periodogram, Signal, Spectrum};
use crate::error::{param, Result};

/// Eigentriple decomposition of one window.
///
/// `singular_values` holds all `L` values in descending order. `components`
/// holds the diagonally averaged elementary series for the leading
/// `components.len()` eigentriples; a full decomposition reconstructs all of
/// them and they sum back to the input.
#[derive(Debug, Clone)]
pub struct SsaDecomposition {
    window: usize,
    lagged: usize,
    fs: f64,
    singular_values: Vec<f64>,
    components: Vec<Vec<f64>>,
}

impl SsaDecomposition {
    /// Embedding dimension `L`.
    pub fn window(&self) -> usize {
        self.window
    }

    /// Number of lagged vectors `K = N - L + 1`.
    pub fn lagged(&self) -> usize {
        self.lagged
    }

    pub fn series_len(&self) -> usize {
        self.window + self.lagged - 1
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn is_complete(&self) -> bool {
        self.components.len() == self.singular_values.len()
    }

    /// Leading eigentriples needed to hold `mass` of the total squared
    /// singular-value mass. Zero for an all-zero input.
    pub fn count_for_mass(&self, mass: f64) -> usize {
        count_for_mass(&self.singular_values, mass)
    }

    /// Sum of all reconstructed components.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.series_len()];
        for c in &self.components {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v;
            }
        }
        out
    }
}

fn count_for_mass(singular_values: &[f64], mass: f64) -> usize {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total <= 0.0 {
        return 0;
    }
    let mut acc = 0.0;
    for (i, s) in singular_values.iter().enumerate() {
        acc += s * s;
        if acc >= mass * total {
            return i + 1;
        }
    }
    singular_values.len()
}

/// Full decomposition: embeds `x` into an `L x K` trajectory matrix, takes its
/// SVD and hankelizes every rank-one term.
pub fn ssa_decompose(x: &Signal, window: usize) -> Result<SsaDecomposition> {
    decompose(x, window, None)
}

/// Like [`ssa_decompose`] but only reconstructs the leading components that
/// hold `mass` of the squared singular-value total.
pub fn ssa_decompose_leading(x: &Signal, window: usize, mass: f64) -> Result<SsaDecomposition> {
    if !(mass > 0.0 && mass <= 1.0) {
        return param(format!("retained mass must be in (0, 1], got {mass}"));
    }
    decompose(x, window, Some(mass))
}

fn decompose(x: &Signal, window: usize, mass: Option<f64>) -> Result<SsaDecomposition> {
    let s = x.samples();
    let n = s.len();
    if window < 1 || 2 * window >= n {
        return param(format!("SSA window {window} must satisfy 1 <= L < N/2 (N = {n})"));
    }
    let l = window;
    let k = n - l + 1;

    // Lag-covariance X X^T, filled by the diagonal recurrence
    // G[i+1][j+1] = G[i][j] - x[i] x[j] + x[i+K] x[j+K].
    let mut gram = DMatrix::<f64>::zeros(l, l);
    for j in 0..l {
        gram[(0, j)] = (0..k).map(|t| s[t] * s[j + t]).sum();
    }
    for i in 0..l - 1 {
        for j in i..l - 1 {
            gram[(i + 1, j + 1)] = gram[(i, j)] - s[i] * s[j] + s[i + k] * s[j + k];
        }
    }
    for i in 0..l {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }

    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let singular_values: Vec<f64> = order
        .iter()
        .map(|&i| eig.eigenvalues[i].max(0.0).sqrt())
        .collect();

    let keep = match mass {
        None => l,
        Some(m) => count_for_mass(&singular_values, m),
    };

    let counts: Vec<f64> = (0..n)
        .map(|t| ((t + 1).min(l).min(k).min(n - t)) as f64)
        .collect();
    let components = order[..keep]
        .iter()
        .map(|&col| {
            let u: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
            hankelize_projection(s, &u, k, &counts)
        })
        .collect();

    Ok(SsaDecomposition {
        window: l,
        lagged: k,
        fs: x.fs(),
        singular_values,
        components,
    })
}

/// Diagonal average of `u u^T X` for unit eigenvector `u`.
fn hankelize_projection(s: &[f64], u: &[f64], k: usize, counts: &[f64]) -> Vec<f64> {
    let l = u.len();
    // z = X^T u
    let z: Vec<f64> = (0..k)
        .map(|j| u.iter().zip(&s[j..j + l]).map(|(a, b)| a * b).sum())
        .collect();
    let mut out = vec![0.0; l + k - 1];
    for (i, &ui) in u.iter().enumerate() {
        for (o, zj) in out[i..i + k].iter_mut().zip(&z) {
            *o += ui * zj;
        }
    }
    for (o, c) in out.iter_mut().zip(counts) {
        *o /= c;
    }
    out
}

/// Sum of elementary components sharing a dominant frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSeries {
    pub series: Vec<f64>,
    /// Indices into the decomposition's eigentriples.
    pub members: Vec<usize>,
    /// Dominant periodogram peaks of `series`, strongest first.
    pub dominant_bpm: Vec<f64>,
}

/// Strongest dominant-peak BPM of one series, `None` for a silent series.
fn primary_bpm(series: &[f64], fs: f64, n_fft: usize, ratio: f64) -> Result<Option<f64>> {
    let s = periodogram(&Signal::new(series.to_vec(), fs)?, n_fft)?;
    Ok(dominant_peaks(&s, ratio)?.first().map(|p| p.bpm))
}

fn dominant_bpms(series: &[f64], fs: f64, n_fft: usize, ratio: f64) -> Result<Vec<f64>> {
    let s = periodogram(&Signal::new(series.to_vec(), fs)?, n_fft)?;
    Ok(dominant_peaks(&s, ratio)?.iter().map(|p| p.bpm).collect())
}

/// Groups the leading components holding `retained_mass` of the singular-value
/// energy by dominant frequency.
///
/// Components are visited in descending singular-value order. Each joins the
/// first group whose anchor frequency (the first member's strongest peak) lies
/// within `bpm_tolerance`, otherwise it opens a new group.
pub fn group_components(
    dec: &SsaDecomposition,
    bpm_tolerance: f64,
    retained_mass: f64,
    n_fft: usize,
) -> Result<Vec<GroupedSeries>> {
    const PEAK_RATIO: f64 = 0.5;
    if !(bpm_tolerance >= 0.0) {
        return param(format!("grouping tolerance must be >= 0, got {bpm_tolerance}"));
    }
    let retained = dec.count_for_mass(retained_mass);
    if retained > dec.components.len() {
        return param(format!(
            "{retained} components needed for the retained mass but only {} were reconstructed",
            dec.components.len()
        ));
    }

    let mut anchors: Vec<Option<f64>> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..retained {
        let bpm = primary_bpm(&dec.components[i], dec.fs, n_fft, PEAK_RATIO)?;
        let slot = bpm.and_then(|b| {
            anchors
                .iter()
                .position(|a| a.is_some_and(|a| (a - b).abs() <= bpm_tolerance))
        });
        match slot {
            Some(g) => members[g].push(i),
            None => {
                anchors.push(bpm);
                members.push(vec![i]);
            }
        }
    }

    members
        .into_iter()
        .map(|m| {
            let mut series = vec![0.0; dec.series_len()];
            for &i in &m {
                for (o, v) in series.iter_mut().zip(&dec.components[i]) {
                    *o += v;
                }
            }
            let dominant_bpm = dominant_bpms(&series, dec.fs, n_fft, PEAK_RATIO)?;
            Ok(GroupedSeries {
                series,
                members: m,
                dominant_bpm,
            })
        })
        .collect()
}

/// Drops groups whose dominant frequencies coincide (within one bin) with a
/// dominant accelerometer peak, unless the group also has a dominant peak
/// within `delta_bpm` of the previous heart-rate estimate. Returns the sum of
/// the kept groups, or of all groups if none survive.
pub fn reject_motion_components(
    groups: &[GroupedSeries],
    accel_spectra: &[Spectrum],
    prev_bpm: Option<f64>,
    delta_bpm: f64,
    fs: f64,
) -> Result<Signal> {
    const PEAK_RATIO: f64 = 0.5;
    let Some(first) = groups.first() else {
        return param("no SSA groups to select from");
    };
    let len = first.series.len();

    let mut motion = Vec::new();
    for s in accel_spectra {
        let width = s.bin_width_bpm();
        motion.extend(dominant_peaks(s, PEAK_RATIO)?.into_iter().map(|p| (p.bpm, width)));
    }

    let is_motion = |g: &GroupedSeries| {
        g.dominant_bpm
            .iter()
            .any(|b| motion.iter().any(|(m, w)| (b - m).abs() <= w * (1.0 + 1e-9)))
    };
    let is_protected = |g: &GroupedSeries| match prev_bpm {
        Some(p) => g.dominant_bpm.iter().any(|b| (b - p).abs() <= delta_bpm),
        None => false,
    };

    let kept: Vec<&GroupedSeries> = groups
        .iter()
        .filter(|g| !is_motion(g) || is_protected(g))
        .collect();
    let chosen: Vec<&GroupedSeries> = if kept.is_empty() {
        groups.iter().collect()
    } else {
        kept
    };

    let mut out = vec![0.0; len];
    for g in chosen {
        for (o, v) in out.iter_mut().zip(&g.series) {
            *o += v;
        }
    }
    Signal::new(out, fs)
}
