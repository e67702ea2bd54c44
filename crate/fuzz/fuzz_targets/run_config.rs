#![no_main]

use libfuzzer_sys::fuzz_target;
use loggas::cli::{parse_run_config, SCHEMA_VERSION};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_run_config(text) {
        assert_eq!(cfg.schema_version, SCHEMA_VERSION);
        let json = serde_json::to_string(&cfg).expect("serializes");
        assert_eq!(parse_run_config(&json).expect("round trip"), cfg);
    }
});
