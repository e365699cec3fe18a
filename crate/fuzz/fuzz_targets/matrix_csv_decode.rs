#![no_main]

use arpam_cli::matrix_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = matrix_csv::decode(text) {
        assert_eq!(matrix_csv::decode(&matrix_csv::encode(&m)).unwrap(), m);
    }
});
