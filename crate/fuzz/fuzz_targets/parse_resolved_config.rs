#![no_main]

use libfuzzer_sys::fuzz_target;
use smrls_bench::config::{parse_resolved_csv, resolved_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_resolved_csv(text) {
        assert_eq!(parse_resolved_csv(&resolved_csv(&cfg)).unwrap(), cfg);
    }
});
