#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(m) = cgl_core::io::parse_matrix_csv(data) {
        let again = cgl_core::io::parse_matrix_csv(&cgl_core::io::matrix_to_csv(&m)).expect("written matrix parses");
        assert_eq!(again.shape(), m.shape());
    }
    if let Ok((m, Some(labels))) = cgl_core::io::ingest_matrix_csv(data) {
        assert_eq!(labels.len(), m.ncols());
    }
});
