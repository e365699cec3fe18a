#![no_main]

use arpam_cli::pav1;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(vol) = pav1::decode(data) {
        // every accepted buffer is exactly what the encoder would write
        assert_eq!(pav1::encode(&vol), data);
    }
});
