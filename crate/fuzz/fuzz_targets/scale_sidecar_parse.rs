#![no_main]

use arpam_cli::pgm::Scale;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = Scale::parse(text) {
        let back = Scale::parse(&s.to_csv()).unwrap();
        // NaN survives the trip but never compares equal
        assert_eq!(back.to_csv(), s.to_csv());
    }
});
