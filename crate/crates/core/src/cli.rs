//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{apply, load_config, render};
use crate::dataset::{ablate, evaluate_recordings, load_dir};
use crate::error::{Error, Result};
use crate::io::{load_recording, save_recording, write_trace};
use crate::metrics::{aae, EvaluationReport};
use crate::pipeline::{run_recording, Mode, PipelineConfig};
use crate::synth::{synth_recording, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ppgtrack", version, about = "Heart-rate estimation from wrist PPG and accelerometer recordings")]
struct Cli {
    /// File of `key = value` settings.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one setting; repeatable, applied after --config.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate heart rate for one recording and write the per-window trace.
    Estimate {
        signal: PathBuf,
        /// Ground-truth file, one BPM per window.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        mode: Option<Mode>,
        /// Trace CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every `<subject>.csv` / `<subject>_truth.txt` pair in a directory.
    Evaluate {
        dir: PathBuf,
        #[arg(long)]
        mode: Option<Mode>,
        /// Also write the per-subject table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic recording from a TOML spec.
    Synth {
        spec: PathBuf,
        /// Signal CSV destination; the truth file is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a directory under all four processing modes.
    Ablate {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration.
    ShowConfig,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn require_file(p: &Path) -> Result<(), Failure> {
    match std::fs::metadata(p) {
        Ok(m) if m.is_file() => Ok(()),
        Ok(_) => usage(format!("{}: not a file", p.display())),
        Err(e) => usage(format!("{}: {e}", p.display())),
    }
}

fn require_dir(p: &Path) -> Result<(), Failure> {
    match std::fs::metadata(p) {
        Ok(m) if m.is_dir() => Ok(()),
        Ok(_) => usage(format!("{}: not a directory", p.display())),
        Err(e) => usage(format!("{}: {e}", p.display())),
    }
}

fn build_config(cli: &Cli, mode: Option<Mode>) -> Result<PipelineConfig, Failure> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &cli.config {
        require_file(path)?;
        cfg = load_config(path, cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    for kv in &cli.set {
        let Some((k, v)) = kv.split_once('=') else {
            return usage(format!("--set expects KEY=VALUE, got `{kv}`"));
        };
        apply(&mut cfg, k.trim(), v.trim()).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if let Some(m) = mode {
        cfg.mode = m;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Human-readable table in the layout of a per-subject AAE comparison.
pub fn format_report(mode: Mode, r: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mode {mode} ({})", mode.description());
    let _ = writeln!(s, "{:<12} {:>8} {:>10} {:>10}", "subject", "windows", "AAE", "median ms");
    for sub in &r.subjects {
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>10.2} {:>10.1}",
            sub.subject_id, sub.windows, sub.aae, sub.median_ms
        );
    }
    let total: usize = r.subjects.iter().map(|x| x.windows).sum();
    let _ = writeln!(s, "{:<12} {:>8} {:>10.2} {:>10.1}", "Average", total, r.overall_aae, r.median_ms);
    let _ = writeln!(s, "SD of absolute error  {:.2} BPM", r.overall_sd);
    match r.pearson_r {
        Some(v) => {
            let _ = writeln!(s, "Pearson r             {v:.4}");
        }
        None => {
            let _ = writeln!(s, "Pearson r             n/a (constant sequence)");
        }
    }
    let ba = &r.bland_altman;
    let _ = writeln!(
        s,
        "Bland-Altman          mu {:.2}, sigma {:.2}, LOA [{:.2}, {:.2}]",
        ba.mu, ba.sigma, ba.loa_low, ba.loa_high
    );
    s
}

fn report_csv(r: &EvaluationReport) -> String {
    let mut s = String::from("subject,windows,aae,median_ms\n");
    for sub in &r.subjects {
        let _ = writeln!(s, "{},{},{},{}", sub.subject_id, sub.windows, sub.aae, sub.median_ms);
    }
    let total: usize = r.subjects.iter().map(|x| x.windows).sum();
    let _ = writeln!(s, "Average,{total},{},{}", r.overall_aae, r.median_ms);
    s
}

/// Mode-by-subject AAE table.
pub fn format_ablation(rows: &[(Mode, EvaluationReport)], csv: bool) -> String {
    let mut s = String::new();
    let Some((_, first)) = rows.first() else {
        return s;
    };
    let ids: Vec<&str> = first.subjects.iter().map(|x| x.subject_id.as_str()).collect();
    if csv {
        let _ = writeln!(s, "mode,{},Average", ids.join(","));
        for (m, r) in rows {
            let vals: Vec<String> = r.subjects.iter().map(|x| x.aae.to_string()).collect();
            let _ = writeln!(s, "{m},{},{}", vals.join(","), r.overall_aae);
        }
        return s;
    }
    let _ = write!(s, "{:<24}", "mode");
    for id in &ids {
        let _ = write!(s, " {id:>7}");
    }
    let _ = writeln!(s, " {:>8}", "Average");
    for (m, r) in rows {
        let _ = write!(s, "{:<24}", format!("{m} {}", m.description()));
        for x in &r.subjects {
            let _ = write!(s, " {:>7.2}", x.aae);
        }
        let _ = writeln!(s, " {:>8.2}", r.overall_aae);
    }
    s
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Estimate { signal, truth, mode, out: dest } => {
            let cfg = build_config(cli, *mode)?;
            require_file(signal)?;
            if let Some(t) = truth {
                require_file(t)?;
            }
            let rec = load_recording(signal, truth.as_deref(), cfg.window_seconds, cfg.shift_seconds)?;
            let trace = run_recording(&rec, &cfg)?;
            let summary = match trace.truth() {
                Some(t) => format!(
                    "{}: {} windows, AAE {:.2} BPM, median {:.1} ms/window",
                    trace.subject_id,
                    trace.records.len(),
                    aae(&trace.estimates(), &t)?,
                    trace.median_ms()
                ),
                None => format!(
                    "{}: {} windows, median {:.1} ms/window",
                    trace.subject_id,
                    trace.records.len(),
                    trace.median_ms()
                ),
            };
            match dest {
                Some(p) => {
                    let mut w = create(p)?;
                    write_trace(&trace, &mut w).and_then(|_| w.flush()).map_err(io_err(p))?;
                    writeln!(out, "{summary}").map_err(io_err(Path::new("<stdout>")))?;
                }
                None => {
                    write_trace(&trace, &mut *out).map_err(io_err(Path::new("<stdout>")))?;
                    eprintln!("{summary}");
                }
            }
        }
        Command::Evaluate { dir, mode, out: dest } => {
            let cfg = build_config(cli, *mode)?;
            require_dir(dir)?;
            let recs = load_dir(dir, &cfg)?;
            let report = evaluate_recordings(&recs, &cfg)?;
            write!(out, "{}", format_report(cfg.mode, &report)).map_err(io_err(Path::new("<stdout>")))?;
            if let Some(p) = dest {
                std::fs::write(p, report_csv(&report)).map_err(io_err(p))?;
            }
        }
        Command::Synth { spec, out: dest } => {
            require_file(spec)?;
            let text = std::fs::read_to_string(spec).map_err(io_err(spec))?;
            let spec = SynthSpec::from_toml(&text).map_err(|e| Failure::Usage(e.to_string()))?;
            let rec = synth_recording(&spec)?;
            let dir = match dest.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            let stem = dest
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Failure::Usage(format!("{}: bad output name", dest.display())))?;
            let (sig, truth) = save_recording(&rec, &dir, stem)?;
            writeln!(out, "wrote {}", sig.display()).map_err(io_err(Path::new("<stdout>")))?;
            if let Some(t) = truth {
                writeln!(out, "wrote {}", t.display()).map_err(io_err(Path::new("<stdout>")))?;
            }
        }
        Command::Ablate { dir, out: dest } => {
            let cfg = build_config(cli, None)?;
            require_dir(dir)?;
            let recs = load_dir(dir, &cfg)?;
            let rows = ablate(&recs, &cfg)?;
            write!(out, "{}", format_ablation(&rows, false)).map_err(io_err(Path::new("<stdout>")))?;
            if let Some(p) = dest {
                std::fs::write(p, format_ablation(&rows, true)).map_err(io_err(p))?;
            }
        }
        Command::ShowConfig => {
            let cfg = build_config(cli, None)?;
            write!(out, "{}", render(&cfg)).map_err(io_err(Path::new("<stdout>")))?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code; messages go to `out` and stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            let mut msg = e.to_string();
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                if !msg.contains(&s.to_string()) {
                    msg = format!("{msg}: {s}");
                }
                src = s.source();
            }
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}
