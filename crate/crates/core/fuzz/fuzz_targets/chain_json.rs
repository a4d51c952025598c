#![no_main]

use hoisynth::dynamics::{inverse_dynamics, KinematicChain};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(chain) = serde_json::from_slice::<KinematicChain>(data) {
        if chain.validate().is_ok() && chain.dof() <= 64 {
            let z = vec![0.0; chain.dof()];
            let _ = inverse_dynamics(&chain, &z, &z, &z);
        }
    }
});
