#![no_main]

use libfuzzer_sys::fuzz_target;
use smrls_bench::compare::{compare_summaries, parse_summary};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(entries) = parse_summary(text) {
        let table = compare_summaries(&[("run".to_string(), entries)]).unwrap();
        assert_eq!(table.rows.len(), 1);
        let _ = table.to_csv();
    }
});
