mod common;

use cgpcox::finite_gp::{integration_weights, intensity_measure};
use cgpcox::KnotGrid;
use common::dense_trapezoid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn measure_matches_dense_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let grids =
        [KnotGrid::new(&[(0.0, 50.0)], &[37]).unwrap(), KnotGrid::new(&[(0.0, 1.0), (-1.0, 2.0)], &[6, 9]).unwrap()];
    for grid in &grids {
        let w = integration_weights(grid);
        for _ in 0..20 {
            let xi: Vec<f64> = (0..grid.size()).map(|_| rng.random_range(0.0..5.0)).collect();
            let exact = intensity_measure(&xi, &w).unwrap();
            let dense = dense_trapezoid(&xi, grid, 4);
            assert!((exact - dense).abs() <= 1e-9 * dense.abs());
        }
    }
}
