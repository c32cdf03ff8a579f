#![no_main]
use cgl_cli::spec::ExperimentSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(spec) = toml::from_str::<ExperimentSpec>(data) {
        let _ = spec.validate(true);
    }
});
