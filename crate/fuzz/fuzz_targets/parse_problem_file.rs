#![no_main]

use libfuzzer_sys::fuzz_target;
use mml_core::oscillatory_lab::parse_problem_file;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_problem_file(text);
    }
});
