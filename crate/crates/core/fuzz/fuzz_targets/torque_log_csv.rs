#![no_main]

use hoisynth::io::{read_torque_log_csv, write_torque_log_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(log) = read_torque_log_csv(text) {
        if let Ok(out) = write_torque_log_csv(&log, 100.0) {
            let again = read_torque_log_csv(&out).expect("written log reparses");
            assert_eq!(again.len(), log.len());
        }
    }
});
