#![no_main]

use libfuzzer_sys::fuzz_target;
use loggas::renorm::{periodic_w, PeriodicConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = PeriodicConfig::from_json(text) {
        let json = config.to_json().expect("valid config serializes");
        let again = PeriodicConfig::from_json(&json).expect("round trip");
        assert_eq!(again.points(), config.points());
        if config.period() <= 64 {
            let _ = periodic_w(&config);
        }
    }
});
