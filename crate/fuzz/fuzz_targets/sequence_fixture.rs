#![no_main]

use libfuzzer_sys::fuzz_target;
use poisson_obstacles::bec::{
    hardcore_vanishing_criterion, parse_sequence_fixture, soft_conditions_check, SlopeTest,
};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(fixture) = parse_sequence_fixture(text) {
        let test = SlopeTest::default();
        let _ = hardcore_vanishing_criterion(&fixture, &test);
        let _ = soft_conditions_check(&fixture, &test);
    }
});
