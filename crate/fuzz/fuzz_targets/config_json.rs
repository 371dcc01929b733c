#![no_main]

use libfuzzer_sys::fuzz_target;
use poisson_obstacles::experiment::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = parse_config(text) {
        let again = parse_config(&config.to_json()).expect("resolved config reparses");
        assert_eq!(again.to_json(), config.to_json());
    }
});
