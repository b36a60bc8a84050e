//! Flat `key = value` configuration for [`PipelineConfig`].
//!
//! Blank lines and lines starting with `#` are ignored. Later assignments win,
//! so command-line overrides can simply be applied after the file.

use std::path::Path;

use crate::adaptive::Axis;
use crate::error::{Error, LoadError, Result};
use crate::pipeline::{Mode, PipelineConfig};

/// Every recognised key with a short description.
pub const KEYS: &[(&str, &str)] = &[
    ("mode", "processing chain: C1, C2, C3 or C4"),
    ("window_seconds", "analysis window length"),
    ("shift_seconds", "hop between consecutive windows"),
    ("band_low_hz", "lower pass-band edge"),
    ("band_high_hz", "upper pass-band edge"),
    ("n_fft", "periodogram length (power of two)"),
    ("filter_order", "adaptive filter taps per stage"),
    ("rls_lambda", "RLS forgetting factor"),
    ("rls_p_init", "RLS initial inverse-covariance diagonal"),
    ("lms_mu", "LMS step size on the unit-energy reference"),
    ("stage_order", "accelerometer axis per cascade stage, e.g. xyz"),
    ("ssa_window", "SSA embedding dimension"),
    ("ssa_retained_mass", "fraction of squared singular values kept"),
    ("ssa_group_tolerance_bins", "grouping tolerance in spectral bins"),
    ("ssa_delta_bpm", "protection radius around the previous estimate"),
    ("epsilon", "fusion agreement threshold in BPM, 0 turns summing off"),
    ("signed_fusion", "one-sided fusion test (true/false)"),
    ("delta_s", "tracker search half-width in bins"),
    ("alpha", "smoothing weight of the new peak"),
    ("beta", "smoothing weight of the previous estimate"),
    ("gamma", "smoothing weight of the estimate before that"),
    ("lambda_inc", "largest increase per window in BPM"),
    ("lambda_dec", "largest decrease per window in BPM"),
];

/// Splits text into `(line, key, value)` triples.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>, LoadError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some((k, v)) = t.split_once('=') else {
            return Err(LoadError::Syntax {
                line: i + 1,
                message: format!("expected `key = value`, found `{t}`"),
            });
        };
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parameter(format!("`{key}`: cannot parse `{value}`")))
}

fn axes(value: &str) -> Result<[Axis; 3]> {
    let parsed: Vec<Axis> = value
        .chars()
        .filter(|c| !matches!(c, ',' | ' '))
        .map(|c| match c.to_ascii_lowercase() {
            'x' => Ok(Axis::X),
            'y' => Ok(Axis::Y),
            'z' => Ok(Axis::Z),
            other => Err(Error::Parameter(format!("`stage_order`: unknown axis `{other}`"))),
        })
        .collect::<Result<_>>()?;
    parsed
        .try_into()
        .map_err(|_| Error::Parameter(format!("`stage_order` needs three axes, got `{value}`")))
}

/// Sets one field from its textual form.
pub fn apply(cfg: &mut PipelineConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "mode" => cfg.mode = value.parse::<Mode>()?,
        "window_seconds" => cfg.window_seconds = num(key, value)?,
        "shift_seconds" => cfg.shift_seconds = num(key, value)?,
        "band_low_hz" => cfg.band.0 = num(key, value)?,
        "band_high_hz" => cfg.band.1 = num(key, value)?,
        "n_fft" => cfg.n_fft = num(key, value)?,
        "filter_order" => cfg.cascade.order = num(key, value)?,
        "rls_lambda" => cfg.cascade.lambda = num(key, value)?,
        "rls_p_init" => cfg.cascade.p_init = num(key, value)?,
        "lms_mu" => cfg.cascade.mu = num(key, value)?,
        "stage_order" => cfg.cascade.stage_order = axes(value)?,
        "ssa_window" => cfg.ssa.window = num(key, value)?,
        "ssa_retained_mass" => cfg.ssa.retained_mass = num(key, value)?,
        "ssa_group_tolerance_bins" => cfg.ssa.group_tolerance_bins = num(key, value)?,
        "ssa_delta_bpm" => cfg.ssa.delta_bpm = num(key, value)?,
        "epsilon" => cfg.epsilon = num(key, value)?,
        "signed_fusion" => cfg.signed_fusion = num(key, value)?,
        "delta_s" => cfg.tracker.delta_s = num(key, value)?,
        "alpha" => cfg.tracker.alpha = num(key, value)?,
        "beta" => cfg.tracker.beta = num(key, value)?,
        "gamma" => cfg.tracker.gamma = num(key, value)?,
        "lambda_inc" => cfg.tracker.lambda_inc = num(key, value)?,
        "lambda_dec" => cfg.tracker.lambda_dec = num(key, value)?,
        other => return Err(Error::Parameter(format!("unknown config key `{other}`"))),
    }
    Ok(())
}

/// Applies every assignment in `text` on top of `cfg`.
pub fn apply_text(cfg: &mut PipelineConfig, text: &str) -> Result<(), LoadError> {
    for (line, k, v) in parse_pairs(text)? {
        apply(cfg, &k, &v).map_err(|e| LoadError::Syntax {
            line,
            message: e.to_string(),
        })?;
    }
    Ok(())
}

pub fn load_config(path: &Path, base: PipelineConfig) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = base;
    apply_text(&mut cfg, &text).map_err(|source| Error::Load {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(cfg)
}

/// Config text that reproduces `cfg`.
pub fn render(cfg: &PipelineConfig) -> String {
    let axis = |a: Axis| match a {
        Axis::X => 'x',
        Axis::Y => 'y',
        Axis::Z => 'z',
    };
    let stage: String = cfg.cascade.stage_order.iter().map(|a| axis(*a)).collect();
    let values: Vec<String> = vec![
        cfg.mode.to_string(),
        cfg.window_seconds.to_string(),
        cfg.shift_seconds.to_string(),
        cfg.band.0.to_string(),
        cfg.band.1.to_string(),
        cfg.n_fft.to_string(),
        cfg.cascade.order.to_string(),
        cfg.cascade.lambda.to_string(),
        cfg.cascade.p_init.to_string(),
        cfg.cascade.mu.to_string(),
        stage,
        cfg.ssa.window.to_string(),
        cfg.ssa.retained_mass.to_string(),
        cfg.ssa.group_tolerance_bins.to_string(),
        cfg.ssa.delta_bpm.to_string(),
        cfg.epsilon.to_string(),
        cfg.signed_fusion.to_string(),
        cfg.tracker.delta_s.to_string(),
        cfg.tracker.alpha.to_string(),
        cfg.tracker.beta.to_string(),
        cfg.tracker.gamma.to_string(),
        cfg.tracker.lambda_inc.to_string(),
        cfg.tracker.lambda_dec.to_string(),
    ];
    KEYS.iter()
        .zip(values)
        .map(|((k, d), v)| format!("# {d}\n{k} = {v}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_round_trips() {
        let mut cfg = PipelineConfig::default();
        cfg.mode = Mode::C3LmsSsa;
        cfg.cascade.stage_order = [Axis::Z, Axis::X, Axis::Y];
        cfg.epsilon = 12.5;
        cfg.signed_fusion = true;
        let mut back = PipelineConfig::default();
        apply_text(&mut back, &render(&cfg)).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn every_key_is_applicable() {
        let text = render(&PipelineConfig::default());
        let pairs = parse_pairs(&text).unwrap();
        assert_eq!(pairs.len(), KEYS.len());
    }

    #[test]
    fn errors_name_line_and_key() {
        let mut cfg = PipelineConfig::default();
        let e = apply_text(&mut cfg, "epsilon = 3\n\nbogus = 1\n").unwrap_err();
        assert!(matches!(&e, LoadError::Syntax { line: 3, message } if message.contains("bogus")));
        let e = apply_text(&mut cfg, "# c\njust words\n").unwrap_err();
        assert!(matches!(e, LoadError::Syntax { line: 2, .. }));
        let e = apply_text(&mut cfg, "n_fft = lots\n").unwrap_err();
        assert!(e.to_string().contains("n_fft"));
        assert!(apply(&mut cfg, "stage_order", "xy").is_err());
    }

    #[test]
    fn later_assignment_wins() {
        let mut cfg = PipelineConfig::default();
        apply_text(&mut cfg, "epsilon = 3\nepsilon = 4\n").unwrap();
        assert_eq!(cfg.epsilon, 4.0);
    }
}
