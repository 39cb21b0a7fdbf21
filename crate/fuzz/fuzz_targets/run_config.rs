#![no_main]

use libfuzzer_sys::fuzz_target;
use mml_core::reports::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = RunConfig::from_toml(text) {
        if let Ok(again) = config.to_toml() {
            let back = RunConfig::from_toml(&again).expect("serialized config parses");
            // NaN fields compare unequal, so compare the serialized form.
            assert_eq!(back.to_toml().unwrap(), again);
        }
    }
});
