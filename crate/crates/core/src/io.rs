//! Recordings and their plain-text file formats.
//!
//! A signal file is CSV with a `# fs=<hz>` line before the header and the
//! columns `ppg1,ppg2,ax,ay,az` (any order, extra columns ignored). A truth
//! file holds one BPM value per line. Other lines starting with `#` are
//! comments in both formats.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::dsp::Signal;
use crate::error::{Error, LoadError, Result};
use crate::pipeline::{window_count, EstimateTrace};

pub const CHANNELS: [&str; 5] = ["ppg1", "ppg2", "ax", "ay", "az"];

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub ppg1: Signal,
    pub ppg2: Signal,
    pub accel_x: Signal,
    pub accel_y: Signal,
    pub accel_z: Signal,
    /// One BPM value per analysis window.
    pub ground_truth: Option<Vec<f64>>,
}

impl Recording {
    /// Builds a recording from equal-length channel vectors.
    pub fn from_channels(subject_id: impl Into<String>, channels: [Vec<f64>; 5], fs: f64) -> Result<Self> {
        let len = channels[0].len();
        if let Some(i) = channels.iter().position(|c| c.len() != len) {
            return Err(Error::Parameter(format!(
                "channel {} has {} samples, expected {len}",
                CHANNELS[i],
                channels[i].len()
            )));
        }
        let [p1, p2, x, y, z] = channels;
        Ok(Recording {
            subject_id: subject_id.into(),
            ppg1: Signal::new(p1, fs)?,
            ppg2: Signal::new(p2, fs)?,
            accel_x: Signal::new(x, fs)?,
            accel_y: Signal::new(y, fs)?,
            accel_z: Signal::new(z, fs)?,
            ground_truth: None,
        })
    }

    pub fn fs(&self) -> f64 {
        self.ppg1.fs()
    }

    pub fn len(&self) -> usize {
        self.ppg1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ppg1.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / self.fs()
    }

    pub fn channels(&self) -> [&Signal; 5] {
        [&self.ppg1, &self.ppg2, &self.accel_x, &self.accel_y, &self.accel_z]
    }

    /// Attaches ground truth after checking it has one value per window.
    pub fn with_ground_truth(mut self, truth: Vec<f64>, window_s: f64, shift_s: f64) -> Result<Self> {
        let expected = window_count(self.len(), self.fs(), window_s, shift_s)?;
        if truth.len() != expected {
            return Err(Error::Alignment {
                expected,
                actual: truth.len(),
            });
        }
        self.ground_truth = Some(truth);
        Ok(self)
    }
}

/// Parses the signal CSV format from text.
pub fn parse_recording(text: &str, subject_id: &str) -> Result<Recording, LoadError> {
    let mut fs = None;
    let mut header_line = None;
    let mut offset = 0;
    for (i, raw) in text.split_inclusive('\n').enumerate() {
        let t = raw.trim();
        if t.is_empty() {
            offset += raw.len();
            continue;
        }
        if let Some(meta) = t.strip_prefix('#') {
            if let Some(v) = meta.trim().strip_prefix("fs=") {
                let rate: f64 = v.trim().parse().map_err(|_| LoadError::BadSampleRate {
                    line: i + 1,
                    value: v.trim().to_string(),
                })?;
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(LoadError::BadSampleRate {
                        line: i + 1,
                        value: v.trim().to_string(),
                    });
                }
                fs = Some(rate);
            }
            offset += raw.len();
            continue;
        }
        header_line = Some(i + 1);
        break;
    }
    let fs = fs.ok_or(LoadError::MissingSampleRate)?;
    let header_line = header_line.ok_or(LoadError::Empty)?;
    let body = &text[offset..];

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(body.as_bytes());
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 5];
    for (slot, name) in cols.iter_mut().zip(CHANNELS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or(LoadError::MissingColumn(name))?;
    }

    let mut data: [Vec<f64>; 5] = Default::default();
    for rec in rdr.records() {
        let rec = rec?;
        let line = header_line - 1 + rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != headers.len() {
            return Err(LoadError::FieldCount {
                line,
                expected: headers.len(),
                found: rec.len(),
            });
        }
        for (c, &col) in cols.iter().enumerate() {
            let cell = &rec[col];
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                LoadError::NotNumeric {
                    line,
                    column: CHANNELS[c].to_string(),
                    value: cell.to_string(),
                }
            })?;
            data[c].push(v);
        }
    }
    if data[0].is_empty() {
        return Err(LoadError::Empty);
    }
    Recording::from_channels(subject_id, data, fs).map_err(|e| LoadError::Syntax {
        line: header_line,
        message: e.to_string(),
    })
}

/// Parses a truth file: one BPM per line.
pub fn parse_truth(text: &str) -> Result<Vec<f64>, LoadError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
            LoadError::NotNumeric {
                line: i + 1,
                column: "bpm".into(),
                value: t.to_string(),
            }
        })?;
        out.push(v);
    }
    Ok(out)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a signal file and, optionally, its truth file. The subject id is the
/// file stem. Truth is checked against the window framing.
pub fn load_recording(
    signal_path: &Path,
    truth_path: Option<&Path>,
    window_s: f64,
    shift_s: f64,
) -> Result<Recording> {
    let id = signal_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let rec = parse_recording(&read_text(signal_path)?, &id).map_err(|source| Error::Load {
        path: signal_path.to_path_buf(),
        source,
    })?;
    match truth_path {
        None => Ok(rec),
        Some(tp) => {
            let truth = parse_truth(&read_text(tp)?).map_err(|source| Error::Load {
                path: tp.to_path_buf(),
                source,
            })?;
            rec.with_ground_truth(truth, window_s, shift_s)
        }
    }
}

/// Writes the signal CSV format. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_recording<W: Write>(rec: &Recording, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# fs={}", rec.fs())?;
    writeln!(w, "{}", CHANNELS.join(","))?;
    let ch = rec.channels();
    for i in 0..rec.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            ch[0].samples()[i],
            ch[1].samples()[i],
            ch[2].samples()[i],
            ch[3].samples()[i],
            ch[4].samples()[i]
        )?;
    }
    Ok(())
}

pub fn write_truth<W: Write>(truth: &[f64], mut w: W) -> std::io::Result<()> {
    for v in truth {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

/// Writes `<dir>/<stem>.csv` and, when present, `<dir>/<stem>_truth.txt`.
pub fn save_recording(rec: &Recording, dir: &Path, stem: &str) -> Result<(PathBuf, Option<PathBuf>)> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    let sig = dir.join(format!("{stem}.csv"));
    let f = fs::File::create(&sig).map_err(io_err(&sig))?;
    write_recording(rec, std::io::BufWriter::new(f)).map_err(io_err(&sig))?;
    let truth = match &rec.ground_truth {
        Some(t) => {
            let p = dir.join(format!("{stem}_truth.txt"));
            let f = fs::File::create(&p).map_err(io_err(&p))?;
            write_truth(t, std::io::BufWriter::new(f)).map_err(io_err(&p))?;
            Some(p)
        }
        None => None,
    };
    Ok((sig, truth))
}

pub const TRACE_HEADER: &str = "window,b_est,b_true,branch,ms";

/// Writes one row per window; `b_true` is empty without ground truth.
pub fn write_trace<W: Write>(trace: &EstimateTrace, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &trace.records {
        let truth = r.b_true.map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{:.3}", r.window_index, r.b_est, truth, r.branch, r.ms)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "# fs=125\nppg1,ppg2,ax,ay,az\n1,2,3,4,5\n0.5,-1e-3,0,0,1\n6,7,8,9,10\n";

    #[test]
    fn minimal_file() {
        let r = parse_recording(SMALL, "s").unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.fs(), 125.0);
        assert_eq!(r.ppg2.samples(), &[2.0, -1e-3, 7.0]);
        assert_eq!(r.accel_z.samples(), &[5.0, 1.0, 10.0]);
    }

    #[test]
    fn column_order_is_free() {
        let text = "# fs=50\naz,ay,ax,ppg2,ppg1,ecg\n5,4,3,2,1,0\n";
        let r = parse_recording(text, "s").unwrap();
        assert_eq!(r.ppg1.samples(), &[1.0]);
        assert_eq!(r.accel_z.samples(), &[5.0]);
    }

    #[test]
    fn load_errors() {
        let e = parse_recording("# fs=125\nppg1,ppg2,ax,ay\n1,2,3,4\n", "s").unwrap_err();
        assert!(matches!(e, LoadError::MissingColumn("az")));
        assert!(e.to_string().contains("az"));

        let e = parse_recording("ppg1,ppg2,ax,ay,az\n1,2,3,4,5\n", "s").unwrap_err();
        assert!(matches!(e, LoadError::MissingSampleRate));

        let e = parse_recording("# fs=abc\nppg1,ppg2,ax,ay,az\n", "s").unwrap_err();
        assert!(matches!(e, LoadError::BadSampleRate { line: 1, .. }));

        let e = parse_recording("# fs=125\nppg1,ppg2,ax,ay,az\n1,2,3,4,5\n1,2,x,4,5\n", "s").unwrap_err();
        match e {
            LoadError::NotNumeric { line, column, value } => {
                assert_eq!((line, column.as_str(), value.as_str()), (4, "ax", "x"));
            }
            other => panic!("{other:?}"),
        }

        let e = parse_recording("# fs=125\n# note\nppg1,ppg2,ax,ay,az\n1,2,3,4\n", "s").unwrap_err();
        assert!(matches!(e, LoadError::FieldCount { line: 4, expected: 5, found: 4 }));

        let e = parse_recording("# fs=125\nppg1,ppg2,ax,ay,az\n", "s").unwrap_err();
        assert!(matches!(e, LoadError::Empty));
    }

    #[test]
    fn truth_parsing() {
        assert_eq!(parse_truth("70\n71.5\n\n# c\n72\n").unwrap(), vec![70.0, 71.5, 72.0]);
        let e = parse_truth("70\nNaN\n").unwrap_err();
        assert!(matches!(e, LoadError::NotNumeric { line: 2, .. }));
    }

    #[test]
    fn truth_alignment() {
        let n = 125 * 20;
        let rec = Recording::from_channels("s", std::array::from_fn(|_| vec![0.0; n]), 125.0).unwrap();
        // (20 - 8) / 2 + 1 = 7 windows
        assert!(rec.clone().with_ground_truth(vec![80.0; 7], 8.0, 2.0).is_ok());
        match rec.with_ground_truth(vec![80.0; 6], 8.0, 2.0) {
            Err(Error::Alignment { expected: 7, actual: 6 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn write_then_parse_is_exact() {
        let vals = [0.1, 1.0 / 3.0, -2.5e-300, 1e300, f64::MIN_POSITIVE];
        let rec = Recording::from_channels("s", std::array::from_fn(|c| vals.iter().map(|v| v * (c + 1) as f64).collect()), 125.0)
            .unwrap();
        let mut buf = Vec::new();
        write_recording(&rec, &mut buf).unwrap();
        let back = parse_recording(std::str::from_utf8(&buf).unwrap(), "s").unwrap();
        assert_eq!(back, rec);
    }
}
