//! Directories of recordings: `<stem>.csv` signal files, each paired with a
//! `<stem>_truth.txt` ground-truth file.

use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::io::{load_recording, Recording};
use crate::metrics::{evaluate, EvaluationReport};
use crate::pipeline::{run_recording, EstimateTrace, Mode, PipelineConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectFiles {
    pub id: String,
    pub signal: PathBuf,
    pub truth: PathBuf,
}

/// Orders digit runs by value, so `S2` sorts before `S10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut x, mut y) = (a.chars().peekable(), b.chars().peekable());
    loop {
        match (x.peek().copied(), y.peek().copied()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(c), Some(d)) if c.is_ascii_digit() && d.is_ascii_digit() => {
                let take = |it: &mut std::iter::Peekable<std::str::Chars>| {
                    let mut s = String::new();
                    while let Some(c) = it.peek().copied().filter(char::is_ascii_digit) {
                        s.push(c);
                        it.next();
                    }
                    s
                };
                let (m, n) = (take(&mut x), take(&mut y));
                let (mt, nt) = (m.trim_start_matches('0'), n.trim_start_matches('0'));
                let ord = mt.len().cmp(&nt.len()).then_with(|| mt.cmp(nt));
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            (Some(c), Some(d)) => {
                if c != d {
                    return c.cmp(&d);
                }
                x.next();
                y.next();
            }
        }
    }
}

/// Lists the signal/truth pairs in `dir`, sorted by subject id. A signal file
/// without its truth file is an error.
pub fn discover(dir: &Path) -> Result<Vec<SubjectFiles>> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for e in entries {
        let path = e
            .map_err(|source| Error::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        if path.extension().and_then(|s| s.to_str()) != Some("csv") {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
            continue;
        };
        let truth = dir.join(format!("{id}_truth.txt"));
        if !truth.is_file() {
            return param(format!("{} has no matching {}", path.display(), truth.display()));
        }
        out.push(SubjectFiles { id, signal: path, truth });
    }
    if out.is_empty() {
        return param(format!("no `<subject>.csv` recordings in {}", dir.display()));
    }
    out.sort_by(|a, b| natural_cmp(&a.id, &b.id));
    Ok(out)
}

/// Loads every subject in `dir`, in parallel.
pub fn load_dir(dir: &Path, cfg: &PipelineConfig) -> Result<Vec<Recording>> {
    discover(dir)?
        .par_iter()
        .map(|s| load_recording(&s.signal, Some(&s.truth), cfg.window_seconds, cfg.shift_seconds))
        .collect()
}

/// Runs every recording under `cfg`, in parallel, keeping input order.
pub fn run_all(recs: &[Recording], cfg: &PipelineConfig) -> Result<Vec<EstimateTrace>> {
    recs.par_iter().map(|r| run_recording(r, cfg)).collect()
}

pub fn evaluate_recordings(recs: &[Recording], cfg: &PipelineConfig) -> Result<EvaluationReport> {
    evaluate(&run_all(recs, cfg)?)
}

/// One report per mode, in [`Mode::ALL`] order.
pub fn ablate(recs: &[Recording], cfg: &PipelineConfig) -> Result<Vec<(Mode, EvaluationReport)>> {
    Mode::ALL
        .par_iter()
        .map(|&m| Ok((m, evaluate_recordings(recs, &cfg.clone().with_mode(m))?)))
        .collect()
}
