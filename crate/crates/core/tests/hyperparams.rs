use cgpcox::constraints::{build_constraint_system, ConstraintSpec};
use cgpcox::cox::select_hyperparams;
use cgpcox::finite_gp::evaluate_intensity;
use cgpcox::kernel::CovarianceMatrix;
use cgpcox::point_process::simulate_poisson;
use cgpcox::tmvn::{sample_tmvn_hmc, TmvnProblem, DEFAULT_TRAVEL_TIME};
use cgpcox::{KernelParams, KnotGrid};

/// Draws an intensity from the constrained prior at lengthscale 0.15, simulates from it and
/// checks that the marginal likelihood, with enough prior draws, prefers the generating lengthscale in most trials.
#[test]
fn marginal_likelihood_recovers_generating_lengthscale() {
    let grid = KnotGrid::new(&[(0.0, 1.0)], &[40]).unwrap();
    let system = build_constraint_system(&[ConstraintSpec::nonnegative()], &grid).unwrap();
    let candidates: Vec<KernelParams> =
        [0.05, 0.15, 0.45].iter().map(|&l| KernelParams::new(400.0, vec![l]).unwrap()).collect();
    let truth_cov = CovarianceMatrix::new(&grid, &candidates[1]).unwrap();
    let mut hits = 0;
    for trial in 0..10u64 {
        let problem = TmvnProblem {
            mean: vec![0.0; grid.size()],
            covariance: &truth_cov,
            system: &system,
            travel_time: DEFAULT_TRAVEL_TIME,
        };
        let draws = sample_tmvn_hmc(&problem, system.feasible_point(), 20, 100 + trial).unwrap();
        let xi = draws.last().unwrap().0.clone();
        let bound = xi.iter().cloned().fold(0.0, f64::max) + 1e-9;
        let f = |x: &[f64]| evaluate_intensity(&xi, &grid, x);
        let pattern = simulate_poisson(f, &[(0.0, 1.0)], bound, 50, 200 + trial).unwrap();
        let (best, _) = select_hyperparams(&pattern, &grid, &system, &candidates, 5000, trial).unwrap();
        if best == 1 {
            hits += 1;
        }
    }
    assert!(hits >= 8, "generating lengthscale chosen in {hits} of 10 trials");
}
