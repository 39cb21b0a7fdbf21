#![no_main]

use libfuzzer_sys::fuzz_target;
use mml_core::hecke_coeffs::{decode_cache, encode_cache};

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = decode_cache(data) {
        // Accepted images are canonical.
        assert_eq!(encode_cache(&table), data);
    }
});
