#![no_main]

use libfuzzer_sys::fuzz_target;
use mml_core::reports::RunRecord;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(record) = RunRecord::from_json(text) {
            let _ = record.results_payload();
        }
    }
});
