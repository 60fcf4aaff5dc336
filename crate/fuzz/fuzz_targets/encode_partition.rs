#![no_main]

use libfuzzer_sys::fuzz_target;
use smrls_core::encode_partition;

fuzz_target!(|data: &[u8]| {
    if data.len() < 3 {
        return;
    }
    let per_dim = usize::from(data[0]);
    let raw_count = usize::from(u16::from_le_bytes([data[1], data[2]]));
    let point: Vec<f64> = data[3..]
        .chunks_exact(8)
        .take(4)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let dimension = point.len();

    // arbitrary counts must be rejected cleanly unless they are perfect powers
    let _ = encode_partition(&point, raw_count, dimension);

    if dimension == 0 {
        return;
    }
    let count = per_dim.pow(dimension as u32);
    if let Ok(index) = encode_partition(&point, count, dimension) {
        assert!((1..=count).contains(&index));
        assert!(point.iter().all(|x| x.is_finite()));
    }
});
