#![no_main]

use hoisynth::augment::AugmentationConfig;
use hoisynth::grasp::ContactSet;
use hoisynth::metrics::SuccessRule;
use hoisynth::synth::SynthConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = serde_json::from_slice::<SynthConfig>(data) {
        let _ = c.settings.validate();
        let _ = c.object.validate();
    }
    if let Ok(c) = serde_json::from_slice::<AugmentationConfig>(data) {
        let _ = c.validate();
    }
    if let Ok(r) = serde_json::from_slice::<SuccessRule>(data) {
        let _ = r.validate();
    }
    if let Ok(s) = serde_json::from_slice::<ContactSet>(data) {
        let _ = s.validate();
    }
});
