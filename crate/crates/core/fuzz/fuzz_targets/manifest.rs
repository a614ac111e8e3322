#![no_main]

use libfuzzer_sys::fuzz_target;
use pgmerge::partition::{decode_manifest, encode_manifest};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = decode_manifest(data) {
        assert_eq!(
            decode_manifest(&encode_manifest(&m)).expect("re-encoded manifest decodes"),
            m
        );
        for id in m.global_ids() {
            assert!(m.source_row(id).is_some());
        }
    }
});
