#![no_main]

use libfuzzer_sys::fuzz_target;
use poisson_obstacles::vacancy::OccupancyGrid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = OccupancyGrid::parse_export(text) {
        let again = OccupancyGrid::parse_export(&grid.to_export()).expect("export reparses");
        assert_eq!(again.occupied(), grid.occupied());
        assert_eq!(again.extent(), grid.extent());
    }
});
