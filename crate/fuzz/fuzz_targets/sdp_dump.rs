#![no_main]

use chanbox::sdp::parse_dump;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(program) = parse_dump(text) {
        assert_eq!(parse_dump(&program.dump()).expect("dump of a parsed program"), program);
    }
});
