#![no_main]

use libfuzzer_sys::fuzz_target;
use pgmerge::vecstore::{encode_ivecs, parse_ivecs};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_ivecs(data) {
        assert_eq!(encode_ivecs(&rows), data);
    }
});
