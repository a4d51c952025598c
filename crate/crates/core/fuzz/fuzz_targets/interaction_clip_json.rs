#![no_main]

use hoisynth::synth::InteractionClip;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(clip) = InteractionClip::from_json(data) {
        let again = InteractionClip::from_json(clip.to_json().as_bytes()).expect("serialized clip reparses");
        assert_eq!(again.to_json(), clip.to_json());
    }
});
