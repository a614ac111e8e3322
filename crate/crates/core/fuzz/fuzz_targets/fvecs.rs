#![no_main]

use libfuzzer_sys::fuzz_target;
use pgmerge::vecstore::{encode_fvecs, parse_fvecs};

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = parse_fvecs(data) {
        // Whatever parses must re-encode to the same bytes.
        assert_eq!(encode_fvecs(&set), data);
    }
});
