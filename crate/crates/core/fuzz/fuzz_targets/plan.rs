#![no_main]

use libfuzzer_sys::fuzz_target;
use pgmerge::mos::{decode_plan, encode_plan};

fuzz_target!(|data: &[u8]| {
    if let Ok(plan) = decode_plan(data) {
        let again = decode_plan(&encode_plan(&plan)).expect("re-encoded plan decodes");
        assert_eq!(again.edges(), plan.edges());
    }
});
