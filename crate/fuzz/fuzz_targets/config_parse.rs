#![no_main]

use libfuzzer_sys::fuzz_target;

// Config files come from users; parsing plus cross-field validation must
// never panic, only return errors.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = oedsel::config::parse_config(text) {
            let _ = config.validate();
        }
    }
});
