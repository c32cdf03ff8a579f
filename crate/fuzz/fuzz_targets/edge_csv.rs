#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(g) = cgl_core::io::parse_edge_csv(data, None) {
        let back = cgl_core::io::parse_edge_csv(&cgl_core::io::graph_to_edge_csv(&g), Some(g.n())).expect("written edges parse");
        assert_eq!(back.edge_count(), g.edge_count());
    }
});
