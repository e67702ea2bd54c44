#![no_main]

use libfuzzer_sys::fuzz_target;
use loggas::cli::parse_argv;

// NUL-separated arguments after the program name.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let argv = std::iter::once("loggas").chain(text.split('\0'));
    let _ = parse_argv(argv);
});
