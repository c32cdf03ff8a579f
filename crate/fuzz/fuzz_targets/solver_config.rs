#![no_main]
use cgl_core::io::{parse_solver_config, ConfigFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    for format in [ConfigFormat::Toml, ConfigFormat::Json] {
        if let Ok(cfg) = parse_solver_config(data, format) {
            cfg.validate().expect("parsed configs are valid");
        }
    }
});
