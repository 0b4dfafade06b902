//! Arbitrary bytes into the run-config reader.
//!
//! Run with: `cargo +nightly fuzz run parse_config`

#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = cma_core::config::parse_config(text);
    }
});
