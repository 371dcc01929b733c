#![no_main]

use libfuzzer_sys::fuzz_target;
use poisson_obstacles::sampler::parse_point_dump;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((d, coords)) = parse_point_dump(text) {
        assert!(coords.iter().all(|v| v.is_finite()));
        if d > 0 {
            assert_eq!(coords.len() % d, 0);
        } else {
            assert!(coords.is_empty());
        }
    }
});
