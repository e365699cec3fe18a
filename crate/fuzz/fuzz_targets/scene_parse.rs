#![no_main]

use arpam::SceneSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(scene) = SceneSpec::parse(text) {
        assert_eq!(SceneSpec::parse(&scene.to_text()).unwrap(), scene);
    }
});
