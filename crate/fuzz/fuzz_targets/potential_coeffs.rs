#![no_main]

use libfuzzer_sys::fuzz_target;
use loggas::cli::{parse_coeffs, potential_from_args};
use loggas::potential::Potential;

// "name\ncoeffs"
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (name, coeffs) = text.split_once('\n').unwrap_or((text, ""));
    if let Ok(c) = parse_coeffs(coeffs) {
        assert!(c.iter().all(|x| x.is_finite()));
        let _ = Potential::from_name(name, Some(&c));
    }
    let _ = Potential::from_name(name, None);
    let _ = potential_from_args(Some(name), Some(coeffs));
});
