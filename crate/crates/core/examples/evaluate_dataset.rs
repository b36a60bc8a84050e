// Evaluates a directory of `<subject>.csv` + `<subject>_truth.txt` files.
//
// Without an argument a small synthetic dataset is written to a temporary
// directory first.
//
// ```text
// cargo run --release --example evaluate_dataset [dir]
// ```

use std::path::Path;

use ppgtrack::cli::{format_ablation, format_report};
use ppgtrack::dataset::{ablate, evaluate_recordings, load_dir};
use ppgtrack::io::save_recording;
use ppgtrack::pipeline::PipelineConfig;
use ppgtrack::synth::{synth_recording, Artifact, AxisName, SynthSpec};

fn write_synthetic(dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    for (i, seed) in [3u64, 5, 8].into_iter().enumerate() {
        let mut spec = SynthSpec::ramp(40.0, 75.0 + 10.0 * i as f64, 95.0 + 5.0 * i as f64, seed);
        spec.subject_id = format!("S{}", i + 1);
        spec.ppg_noise = 0.2;
        spec.accel_noise = 0.05;
        spec.artifacts = [(AxisName::X, 2.3), (AxisName::Y, 0.9), (AxisName::Z, 2.9)]
            .into_iter()
            .map(|(axis, f)| Artifact {
                freq_hz: f,
                freq_end_hz: None,
                amplitude: 0.8,
                axes: vec![axis],
                coupling: vec![0.8, 0.3],
            })
            .collect();
        let rec = synth_recording(&spec)?;
        save_recording(&rec, dir, &spec.subject_id)?;
    }
    Ok(())
}

fn evaluate(dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = PipelineConfig::default();
    let recs = load_dir(dir, &cfg)?;
    let report = evaluate_recordings(&recs, &cfg)?;
    print!("{}", format_report(cfg.mode, &report));
    println!();
    print!("{}", format_ablation(&ablate(&recs, &cfg)?, false));
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    write_synthetic(tmp.path())?;
    evaluate(tmp.path())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    match std::env::args().nth(1) {
        Some(dir) => evaluate(Path::new(&dir)),
        None => run_example(),
    }
}
