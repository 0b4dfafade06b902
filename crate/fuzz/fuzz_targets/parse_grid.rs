//! Arbitrary bytes into the grid reader. Errors are fine, panics are not.
//!
//! Run with: `cargo +nightly fuzz run parse_grid`

#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = cma_core::gridio::parse_grid(text);
    }
});
