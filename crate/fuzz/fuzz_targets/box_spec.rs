#![no_main]

use chanbox::io::{parse_box, BoxSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(b) = parse_box(text) {
        let again = serde_json::to_string(&BoxSpec::from_box(&b)).unwrap();
        assert_eq!(parse_box(&again).expect("Choi form of a parsed box"), b);
    }
});
