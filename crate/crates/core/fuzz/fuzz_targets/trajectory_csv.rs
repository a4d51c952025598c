#![no_main]

use hoisynth::io::read_trajectory_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = read_trajectory_csv(text);
});
