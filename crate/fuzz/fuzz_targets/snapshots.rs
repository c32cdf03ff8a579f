#![no_main]
use libfuzzer_sys::fuzz_target;

// Matrix CSV and sidecar JSON, separated by the first NUL byte.
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else { return };
    let (Ok(csv), Ok(json)) = (std::str::from_utf8(&data[..split]), std::str::from_utf8(&data[split + 1..])) else { return };
    if let Ok((set, side)) = cgl_core::io::parse_snapshots(csv, json) {
        assert_eq!((set.m(), set.n()), (side.m, side.n));
    }
});
