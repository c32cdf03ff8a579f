#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(rc) = cgl_core::io::parse_roll_call(data) {
        assert_eq!(rc.states.len(), rc.signals.ncols());
        assert!(rc.states.windows(2).all(|w| w[0] < w[1]));
    }
});
