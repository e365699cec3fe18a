#![no_main]

use arpam::metrics::Region;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = text.parse::<Region>() {
        assert_eq!(r.to_string().parse::<Region>().unwrap(), r);
        let _ = r.mask((7, 5));
    }
});
