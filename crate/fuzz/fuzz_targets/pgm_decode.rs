#![no_main]

use arpam_cli::pgm;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = pgm::decode(data) {
        assert!(img.iter().all(|v| (0.0..=1.0).contains(v)));
    }
});
