//! Conditional combination of the cascade output and the SSA output.
//!
//! Both signals are scaled to unit energy first. The sum is used only when the
//! SSA spectrum peak agrees with the previous heart-rate estimate to within
//! `epsilon` BPM; otherwise the cascade output stands alone.

use crate::dsp::{normalize_energy, periodogram, Signal};
use crate::error::{param, Error, Result};

/// Which combination produced the fused window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Normalized cascade output alone.
    Rls,
    /// Normalized cascade output plus normalized SSA output.
    Sum,
    /// Normalized SSA output alone (SSA-only mode, or a silent cascade output).
    Ssa,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Rls => "rls",
            Branch::Sum => "sum",
            Branch::Ssa => "ssa",
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rls" => Ok(Branch::Rls),
            "sum" => Ok(Branch::Sum),
            "ssa" => Ok(Branch::Ssa),
            other => param(format!("unknown branch `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FusionInput<'a> {
    /// Cascade-filtered window.
    pub rls: &'a Signal,
    /// SSA-denoised window.
    pub ssa: &'a Signal,
    /// BPM at the SSA spectrum maximum.
    pub ssa_bpm: f64,
    /// Estimate from the previous window; `None` before tracking starts.
    pub prev_bpm: Option<f64>,
    /// Agreement threshold in BPM. Zero never sums under the absolute test.
    pub epsilon: f64,
    /// 1-based window number within the recording.
    pub window_index: usize,
    /// Use the one-sided test `ssa_bpm - prev_bpm >= epsilon` instead of the
    /// absolute difference.
    pub signed: bool,
}

#[derive(Debug, Clone)]
pub struct Fused {
    pub signal: Signal,
    pub branch: Branch,
}

/// Chooses between `x̂_R` and `x̂_R + x̂_S`. The sum is never used for the first
/// two windows of a recording.
pub fn conditional_sum(input: &FusionInput<'_>) -> Result<Fused> {
    if !(input.epsilon >= 0.0 && input.epsilon.is_finite()) {
        return param(format!("epsilon must be non-negative, got {}", input.epsilon));
    }
    if input.rls.len() != input.ssa.len() {
        return param(format!(
            "cascade output has {} samples, SSA output has {}",
            input.rls.len(),
            input.ssa.len()
        ));
    }
    let rls_silent = input.rls.energy() <= 0.0;
    let ssa_silent = input.ssa.energy() <= 0.0;
    match (rls_silent, ssa_silent) {
        (true, true) => {
            return Err(Error::Degenerate("both fusion inputs have zero energy".into()));
        }
        (true, false) => {
            return Ok(Fused {
                signal: normalize_energy(input.ssa)?,
                branch: Branch::Ssa,
            });
        }
        (false, true) => {
            return Ok(Fused {
                signal: normalize_energy(input.rls)?,
                branch: Branch::Rls,
            });
        }
        (false, false) => {}
    }

    let rls = normalize_energy(input.rls)?;
    let agrees = match input.prev_bpm {
        Some(prev) if input.window_index > 2 => {
            let diff = input.ssa_bpm - prev;
            let diff = if input.signed { diff } else { diff.abs() };
            diff < input.epsilon
        }
        _ => false,
    };
    if !agrees {
        return Ok(Fused {
            signal: rls,
            branch: Branch::Rls,
        });
    }
    let ssa = normalize_energy(input.ssa)?;
    let sum = rls
        .samples()
        .iter()
        .zip(ssa.samples())
        .map(|(a, b)| a + b)
        .collect();
    Ok(Fused {
        signal: rls.with_samples(sum),
        branch: Branch::Sum,
    })
}

/// BPM of the strongest periodogram bin inside `[f_lo, f_hi]` Hz.
pub fn spectrum_argmax_bpm(x: &Signal, n_fft: usize, f_lo: f64, f_hi: f64) -> Result<f64> {
    let s = periodogram(x, n_fft)?;
    s.band_argmax(f_lo, f_hi)
        .map(|p| p.bpm)
        .ok_or_else(|| Error::Degenerate("no in-band spectral energy".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::tests::{direct_dft_power, tone};
    use proptest::prelude::*;

    const FS: f64 = 125.0;

    fn sig(v: Vec<f64>) -> Signal {
        Signal::new(v, FS).unwrap()
    }

    fn input<'a>(rls: &'a Signal, ssa: &'a Signal, b_s: f64, prev: f64, window: usize) -> FusionInput<'a> {
        FusionInput {
            rls,
            ssa,
            ssa_bpm: b_s,
            prev_bpm: Some(prev),
            epsilon: 15.0,
            window_index: window,
            signed: false,
        }
    }

    #[test]
    fn disagreement_keeps_cascade_only() {
        let r = sig(tone(2.0, 3.0, 1000, FS));
        let s = sig(tone(2.5, 1.0, 1000, FS));
        let out = conditional_sum(&input(&r, &s, 150.0, 120.0, 10)).unwrap();
        assert_eq!(out.branch, Branch::Rls);
        assert_eq!(out.signal, normalize_energy(&r).unwrap());
        // symmetric test also rejects a large drop
        let out = conditional_sum(&input(&r, &s, 90.0, 120.0, 10)).unwrap();
        assert_eq!(out.branch, Branch::Rls);
    }

    #[test]
    fn signed_mode_accepts_large_drop() {
        let r = sig(tone(2.0, 3.0, 1000, FS));
        let s = sig(tone(2.0, 1.0, 1000, FS));
        let mut inp = input(&r, &s, 90.0, 120.0, 10);
        inp.signed = true;
        assert_eq!(conditional_sum(&inp).unwrap().branch, Branch::Sum);
    }

    #[test]
    fn coherent_sum_enhances_shared_peak() {
        let r_raw: Vec<f64> = tone(2.0, 3.0, 1000, FS)
            .iter()
            .zip(tone(1.1, 2.5, 1000, FS))
            .map(|(a, b)| a + b)
            .collect();
        let s_raw: Vec<f64> = tone(2.0, 0.5, 1000, FS)
            .iter()
            .zip(tone(2.9, 0.4, 1000, FS))
            .map(|(a, b)| a + b)
            .collect();
        let r = sig(r_raw);
        let s = sig(s_raw);
        let out = conditional_sum(&input(&r, &s, 122.0, 120.0, 10)).unwrap();
        assert_eq!(out.branch, Branch::Sum);
        let k = (120.0 / (60.0 * FS / 4096.0)).round() as usize;
        let fused = direct_dft_power(out.signal.samples(), 4096)[k];
        let rn = direct_dft_power(normalize_energy(&r).unwrap().samples(), 4096)[k];
        let sn = direct_dft_power(normalize_energy(&s).unwrap().samples(), 4096)[k];
        assert!(fused > rn && fused > sn);
    }

    #[test]
    fn first_two_windows_never_sum() {
        let r = sig(tone(2.0, 1.0, 1000, FS));
        let s = sig(tone(2.0, 1.0, 1000, FS));
        for w in [1, 2] {
            let out = conditional_sum(&input(&r, &s, 120.0, 120.0, w)).unwrap();
            assert_eq!(out.branch, Branch::Rls);
        }
        let mut no_prev = input(&r, &s, 120.0, 120.0, 5);
        no_prev.prev_bpm = None;
        assert_eq!(conditional_sum(&no_prev).unwrap().branch, Branch::Rls);
        assert_eq!(conditional_sum(&input(&r, &s, 120.0, 120.0, 3)).unwrap().branch, Branch::Sum);
    }

    #[test]
    fn silent_inputs() {
        let r = sig(tone(2.0, 1.0, 100, FS));
        let z = sig(vec![0.0; 100]);
        assert_eq!(conditional_sum(&input(&r, &z, 120.0, 120.0, 5)).unwrap().branch, Branch::Rls);
        assert_eq!(conditional_sum(&input(&z, &r, 120.0, 120.0, 5)).unwrap().branch, Branch::Ssa);
        assert!(matches!(
            conditional_sum(&input(&z, &z, 120.0, 120.0, 5)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn argmax_bpm() {
        let bin = 60.0 * FS / 4096.0;
        let b = spectrum_argmax_bpm(&sig(tone(2.0, 1.0, 1000, FS)), 4096, 0.4, 3.5).unwrap();
        assert!((b - 120.0).abs() <= bin);
        let two: Vec<f64> = tone(1.5, 1.0, 1000, FS)
            .iter()
            .zip(tone(2.5, 0.6, 1000, FS))
            .map(|(a, b)| a + b)
            .collect();
        let b = spectrum_argmax_bpm(&sig(two), 4096, 0.4, 3.5).unwrap();
        assert!((b - 90.0).abs() <= bin);
        let out_of_band: Vec<f64> = tone(5.0, 3.0, 1000, FS)
            .iter()
            .zip(tone(2.0, 1.0, 1000, FS))
            .map(|(a, b)| a + b)
            .collect();
        let b = spectrum_argmax_bpm(&sig(out_of_band), 4096, 0.4, 3.5).unwrap();
        assert!((b - 120.0).abs() <= bin);
        assert!(spectrum_argmax_bpm(&sig(vec![0.0; 100]), 4096, 0.4, 3.5).is_err());
    }

    fn nonzero_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, 64)
            .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
    }

    proptest! {
        #[test]
        fn scale_invariant_and_exclusive(
            r in nonzero_vec(),
            s in nonzero_vec(),
            ka in 1e-3f64..1e3,
            kb in 1e-3f64..1e3,
            b_s in 30.0f64..200.0,
            prev in 30.0f64..200.0,
            window in 1usize..10,
        ) {
            let (r1, s1) = (sig(r.clone()), sig(s.clone()));
            let r2 = sig(r.iter().map(|v| v * ka).collect());
            let s2 = sig(s.iter().map(|v| v * kb).collect());
            let a = conditional_sum(&input(&r1, &s1, b_s, prev, window)).unwrap();
            let b = conditional_sum(&input(&r2, &s2, b_s, prev, window)).unwrap();
            prop_assert_eq!(a.branch, b.branch);
            for (x, y) in a.signal.samples().iter().zip(b.signal.samples()) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
            let rn = normalize_energy(&r1).unwrap();
            let sn = normalize_energy(&s1).unwrap();
            let expected: Vec<f64> = match a.branch {
                Branch::Rls => rn.samples().to_vec(),
                Branch::Sum => rn.samples().iter().zip(sn.samples()).map(|(x, y)| x + y).collect(),
                Branch::Ssa => unreachable!(),
            };
            for (x, y) in a.signal.samples().iter().zip(&expected) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn sum_branch_is_monotone_in_epsilon(
            b_s in 30.0f64..200.0,
            prev in 30.0f64..200.0,
            eps in 0.1f64..40.0,
            extra in 0.0f64..40.0,
        ) {
            let r = sig(tone(2.0, 1.0, 64, FS));
            let s = sig(tone(1.0, 1.0, 64, FS));
            let mut inp = input(&r, &s, b_s, prev, 5);
            inp.epsilon = eps;
            let at_eps = conditional_sum(&inp).unwrap().branch;
            inp.epsilon = eps + extra;
            let at_larger = conditional_sum(&inp).unwrap().branch;
            if at_eps == Branch::Sum {
                prop_assert_eq!(at_larger, Branch::Sum);
            }
        }
    }
}
