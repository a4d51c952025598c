#![no_main]

use hoisynth::motion::MotionClip;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(clip) = MotionClip::from_json(data) {
        let again = MotionClip::from_json(clip.to_json().as_bytes()).expect("serialized clip reparses");
        assert_eq!(again.to_json(), clip.to_json());
    }
});
