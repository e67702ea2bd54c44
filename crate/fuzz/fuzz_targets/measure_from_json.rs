#![no_main]

use libfuzzer_sys::fuzz_target;
use loggas::model::{measure_from_json, measure_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((mu, constants)) = measure_from_json(text) {
        assert!(mu.total_mass().is_finite());
        let json = measure_to_json(&mu, constants).expect("valid measure serializes");
        let (again, _) = measure_from_json(&json).expect("round trip");
        assert_eq!(again.support(), mu.support());
    }
});
