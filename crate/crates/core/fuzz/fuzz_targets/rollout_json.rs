#![no_main]

use hoisynth::reward::Rollout;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = Rollout::from_json(data) {
        let again = Rollout::from_json(r.to_json().as_bytes()).expect("serialized rollout reparses");
        assert_eq!(again.to_json(), r.to_json());
    }
});
