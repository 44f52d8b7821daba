#![no_main]

use chanbox::io::parse_superchannel;
use chanbox::qobjects::validate_superchannel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(theta) = parse_superchannel(text) {
        let _ = validate_superchannel(&theta, 1e-6);
        let again = serde_json::to_string(&theta).unwrap();
        assert_eq!(parse_superchannel(&again).expect("serialized superchannel"), theta);
    }
});
