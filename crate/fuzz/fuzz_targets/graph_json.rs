#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok((g, meta)) = cgl_core::io::parse_graph_json(data) {
        let text = cgl_core::io::graph_to_json(&g, &meta).expect("graph serializes");
        let (back, _) = cgl_core::io::parse_graph_json(&text).expect("written graph parses");
        assert_eq!(back, g);
    }
});
