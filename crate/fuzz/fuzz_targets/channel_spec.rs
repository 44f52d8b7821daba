#![no_main]

use chanbox::io::{parse_channel, ChannelSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ch) = parse_channel(text) {
        // Whatever parses must survive its own Choi form.
        let again = serde_json::to_string(&ChannelSpec::from_channel(&ch)).unwrap();
        parse_channel(&again).expect("Choi form of a parsed channel");
    }
});
