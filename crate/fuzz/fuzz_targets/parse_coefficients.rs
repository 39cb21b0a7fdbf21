#![no_main]

use libfuzzer_sys::fuzz_target;
use mml_core::hecke_coeffs::parse_coefficients;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((table, _)) = parse_coefficients(text) {
        assert!(table.n_max() >= 1);
        assert!(table.values().iter().all(|v| v.is_finite()));
    }
});
