#![no_main]

use libfuzzer_sys::fuzz_target;
use pgmerge::pgraph::{decode_index, encode_index};

fuzz_target!(|data: &[u8]| {
    if let Ok(index) = decode_index(data) {
        assert_eq!(encode_index(&index), data);
    }
});
