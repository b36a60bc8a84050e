// Writing and reading the signal, truth, trace and config file formats.
//
// ```text
// cargo run --example recording_files
// ```

use ppgtrack::config::{apply_text, render};
use ppgtrack::io::{load_recording, save_recording, write_trace};
use ppgtrack::pipeline::{run_recording, Mode, PipelineConfig};
use ppgtrack::synth::{synth_recording, SynthSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let mut spec = SynthSpec::ramp(16.0, 80.0, 90.0, 1);
    spec.subject_id = "demo".into();
    let rec = synth_recording(&spec)?;
    let (sig, truth) = save_recording(&rec, tmp.path(), "demo")?;
    let text = std::fs::read_to_string(&sig)?;
    println!("{} starts with:", sig.display());
    for line in text.lines().take(4) {
        println!("  {line}");
    }

    let back = load_recording(&sig, truth.as_deref(), 8.0, 2.0)?;
    if back != rec {
        return Err("round trip changed the recording".into());
    }
    println!("reloaded {} samples and {} truth values", back.len(), back.ground_truth.as_ref().map_or(0, Vec::len));

    let mut cfg = PipelineConfig::default();
    apply_text(&mut cfg, "mode = C2\nepsilon = 12\n")?;
    assert_eq!(cfg.mode, Mode::C2RlsOnly);
    println!("first lines of the config format:");
    for line in render(&cfg).lines().take(4) {
        println!("  {line}");
    }

    let trace = run_recording(&back, &cfg)?;
    let mut csv = Vec::new();
    write_trace(&trace, &mut csv)?;
    print!("{}", String::from_utf8(csv)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
