#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = itermeas::cli::config::parse_config(text) {
            let text = config.to_toml();
            let again = itermeas::cli::config::parse_config(&text).expect("canonical config parses");
            assert_eq!(again.to_toml(), text);
        }
    }
});
