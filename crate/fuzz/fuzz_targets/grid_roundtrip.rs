#![no_main]
//! Whatever the reader accepts must survive format -> parse unchanged,
//! bit for bit.

use cma_core::gridio::{format_grid, parse_grid};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(g) = parse_grid(text) else { return };
    let again = parse_grid(&format_grid(&g).expect("parsed grids are finite")).expect("formatted grid reparses");
    assert_eq!(g.domain(), again.domain());
    for (a, b) in g.values().iter().zip(again.values()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
});
