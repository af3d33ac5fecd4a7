#![no_main]

use libfuzzer_sys::fuzz_target;
use scatlab::experiment::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ScenarioConfig::from_toml_str(text) {
        let _ = cfg.validate();
        let again = ScenarioConfig::from_toml_str(&cfg.to_toml_string().expect("serializes")).expect("round trips");
        assert_eq!(again.scenario, cfg.scenario);
    }
});
