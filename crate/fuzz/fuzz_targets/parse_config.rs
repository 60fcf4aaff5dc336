#![no_main]

use libfuzzer_sys::fuzz_target;
use smrls_bench::config::{parse_config_str, parse_resolved_csv, resolved_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config_str(text) {
        // anything accepted must survive the resolved echo unchanged
        let echoed = parse_resolved_csv(&resolved_csv(&cfg)).expect("echo parses");
        assert_eq!(echoed, cfg);
    }
});
