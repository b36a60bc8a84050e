//! Error statistics for estimate traces.

use crate::error::{param, Error, Result};
use crate::pipeline::{median, EstimateTrace};

fn check_pair(est: &[f64], truth: &[f64], min_len: usize) -> Result<()> {
    if est.len() != truth.len() {
        return param(format!("{} estimates but {} reference values", est.len(), truth.len()));
    }
    if est.len() < min_len {
        return param(format!("need at least {min_len} values, got {}", est.len()));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (divisor `n - 1`).
pub fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Average absolute error.
pub fn aae(est: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(est, truth, 1)?;
    Ok(est.iter().zip(truth).map(|(e, t)| (e - t).abs()).sum::<f64>() / est.len() as f64)
}

/// Pearson product-moment correlation.
pub fn pearson(est: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(est, truth, 2)?;
    let (me, mt) = (mean(est), mean(truth));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (e, t) in est.iter().zip(truth) {
        let (dx, dy) = (e - me, t - mt);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("correlation undefined for a constant sequence".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlandAltman {
    /// Mean of `est - truth`.
    pub mu: f64,
    pub sigma: f64,
    pub loa_low: f64,
    pub loa_high: f64,
}

pub fn bland_altman(est: &[f64], truth: &[f64]) -> Result<BlandAltman> {
    check_pair(est, truth, 2)?;
    let d: Vec<f64> = est.iter().zip(truth).map(|(e, t)| e - t).collect();
    let mu = mean(&d);
    let sigma = sample_sd(&d);
    Ok(BlandAltman {
        mu,
        sigma,
        loa_low: mu - 1.96 * sigma,
        loa_high: mu + 1.96 * sigma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectScore {
    pub subject_id: String,
    pub aae: f64,
    pub windows: usize,
    pub median_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub subjects: Vec<SubjectScore>,
    /// Mean of the per-subject AAE values.
    pub overall_aae: f64,
    /// Standard deviation of absolute errors pooled over all windows.
    pub overall_sd: f64,
    /// `None` when either pooled sequence is constant.
    pub pearson_r: Option<f64>,
    pub bland_altman: BlandAltman,
    /// Median per-window processing time over all windows.
    pub median_ms: f64,
}

impl EvaluationReport {
    pub fn subject(&self, id: &str) -> Option<&SubjectScore> {
        self.subjects.iter().find(|s| s.subject_id == id)
    }
}

/// Scores traces that carry ground truth on every window.
pub fn evaluate(traces: &[EstimateTrace]) -> Result<EvaluationReport> {
    if traces.is_empty() {
        return param("no traces to evaluate");
    }
    let mut subjects = Vec::with_capacity(traces.len());
    let mut all_est = Vec::new();
    let mut all_truth = Vec::new();
    let mut all_ms = Vec::new();
    for t in traces {
        let truth = t
            .truth()
            .ok_or_else(|| Error::Parameter(format!("trace `{}` lacks ground truth", t.subject_id)))?;
        let est = t.estimates();
        subjects.push(SubjectScore {
            subject_id: t.subject_id.clone(),
            aae: aae(&est, &truth)?,
            windows: est.len(),
            median_ms: t.median_ms(),
        });
        all_est.extend(est);
        all_truth.extend(truth);
        all_ms.extend(t.records.iter().map(|r| r.ms));
    }
    let abs_err: Vec<f64> = all_est.iter().zip(&all_truth).map(|(e, t)| (e - t).abs()).collect();
    let overall_aae = subjects.iter().map(|s| s.aae).sum::<f64>() / subjects.len() as f64;
    Ok(EvaluationReport {
        overall_aae,
        overall_sd: sample_sd(&abs_err),
        pearson_r: match pearson(&all_est, &all_truth) {
            Ok(r) => Some(r),
            Err(Error::Degenerate(_)) => None,
            Err(e) => return Err(e),
        },
        bland_altman: bland_altman(&all_est, &all_truth)?,
        median_ms: median(all_ms),
        subjects,
    })
}
