macro_rules! example {
    ($name:ident, $file:literal) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $name() {
            $name::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(bandpass_periodogram, "bandpass_periodogram.rs");
example!(cascade_rls, "cascade_rls.rs");
example!(ssa_motion_rejection, "ssa_motion_rejection.rs");
example!(fusion_tracking, "fusion_tracking.rs");
example!(synthetic_end_to_end, "synthetic_end_to_end.rs");
example!(evaluate_dataset, "evaluate_dataset.rs");
example!(recording_files, "recording_files.rs");
