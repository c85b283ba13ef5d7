//! Fixtures shared by the benchmarks.

use neckwall::{
    build_domain, initial_state, rasterize, BulkSpec, DumbbellGrid, NeckParams, Resolution,
    ScalarField,
};

/// A super-thin dumbbell with `cells` cells across each neck half-dimension,
/// and the initial state with wells at 0 and 1.
pub fn dumbbell(cells: usize) -> (DumbbellGrid, ScalarField) {
    let neck = NeckParams::new(0.1, 0.01, 0.005).expect("valid neck");
    let domain = build_domain(neck, BulkSpec::new(1.0).expect("valid bulk")).expect("valid domain");
    let grid = rasterize(&domain, &Resolution::uniform(cells)).expect("within budget");
    let field = initial_state(&grid, 0.0, 1.0);
    (grid, field)
}
