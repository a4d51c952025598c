#![no_main]

use hoisynth::reward::RewardConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = serde_json::from_slice::<RewardConfig>(data) {
        if cfg.weights.validate().is_ok() {
            assert!(cfg.weights.max_total().is_finite());
        }
    }
});
