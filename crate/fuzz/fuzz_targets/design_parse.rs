#![no_main]

use libfuzzer_sys::fuzz_target;

use oedsel::numerics::Design;

// Any accepted design string must build a valid Design and survive a
// display/parse round trip.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(indices) = oedsel::config::parse_design(text) {
            let max = indices.iter().max().copied().unwrap_or(0);
            if let Some(n) = max.checked_add(1) {
                let design = Design::from_indices(n, indices.iter().copied())
                    .expect("parsed design indices are distinct and in range");
                let reparsed = oedsel::config::parse_design(&design.to_string())
                    .expect("rendered design strings parse back");
                assert_eq!(reparsed, indices);
            }
        }
    }
});
