#![no_main]

use libfuzzer_sys::fuzz_target;

// Grid tokens arrive from the CLI; the parser must reject garbage without
// panicking, and accepted axes must be well-formed.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((axis, values)) = oedsel::config::parse_grid_token(text) {
            assert!(axis == 'n' || axis == 'k');
            assert!(!values.is_empty());
            assert!(values.iter().all(|v| *v > 0));
        }
        let _ = oedsel::config::parse_grid(&[text.to_string()]);
    }
});
