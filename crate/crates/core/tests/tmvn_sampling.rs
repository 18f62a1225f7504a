use cgpcox::constraints::{build_constraint_system, check_satisfied, ConstraintSpec, ConstraintSystem, Halfspace};
use cgpcox::kernel::CovarianceMatrix;
use cgpcox::metrics::ess_univariate;
use cgpcox::tmvn::{sample_tmvn_hmc, TmvnProblem, DEFAULT_TRAVEL_TIME};
use cgpcox::{KernelParams, KnotGrid};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    let ess = ess_univariate(x).unwrap().max(1.0);
    (m, (v / ess).sqrt())
}

#[test]
fn wedge_region_matches_rejection_sampler() {
    // x₁ ≥ 0 and x₁ ≥ x₂ for independent standard normals.
    let system = ConstraintSystem::from_halfspaces(
        vec![
            Halfspace { normal: vec![1.0, 0.0], offset: 0.0, source: 0 },
            Halfspace { normal: vec![1.0, -1.0], offset: 0.0, source: 0 },
        ],
        vec![1.0, 0.0],
    )
    .unwrap();
    let cov = CovarianceMatrix::from_matrix(DMatrix::identity(2, 2), 0.0, 1.0).unwrap();
    let problem =
        TmvnProblem { mean: vec![0.0, 0.0], covariance: &cov, system: &system, travel_time: DEFAULT_TRAVEL_TIME };
    let draws = sample_tmvn_hmc(&problem, &[1.0, 0.0], 40_000, 21).unwrap();
    let hits: Vec<f64> = draws.iter().map(|d| if d.0[1] >= 0.0 { 1.0 } else { 0.0 }).collect();
    let (p_hmc, se_hmc) = mean_and_se(&hits);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut inside, mut upper) = (0usize, 0usize);
    while inside < 40_000 {
        let x1: f64 = rng.sample(StandardNormal);
        let x2: f64 = rng.sample(StandardNormal);
        if x1 >= 0.0 && x1 >= x2 {
            inside += 1;
            upper += (x2 >= 0.0) as usize;
        }
    }
    let p_rej = upper as f64 / inside as f64;
    let se_rej = (p_rej * (1.0 - p_rej) / inside as f64).sqrt();
    let se = (se_hmc * se_hmc + se_rej * se_rej).sqrt();
    assert!((p_hmc - p_rej).abs() <= 3.0 * se, "hmc {p_hmc} vs rejection {p_rej} (se {se})");
    // Angular measure: 45° out of 135°.
    assert!((p_rej - 1.0 / 3.0).abs() <= 3.0 * se_rej);
}

#[test]
fn inactive_bounds_recover_covariance() {
    let grid = KnotGrid::new(&[(0.0, 1.0)], &[5]).unwrap();
    let params = KernelParams::new(1.0, vec![0.4]).unwrap();
    let cov = CovarianceMatrix::new(&grid, &params).unwrap();
    let system = build_constraint_system(&[ConstraintSpec::bounded(-1e10, 1e10)], &grid).unwrap();
    let problem =
        TmvnProblem { mean: vec![0.0; 5], covariance: &cov, system: &system, travel_time: DEFAULT_TRAVEL_TIME };
    let draws = sample_tmvn_hmc(&problem, &[0.0; 5], 20_000, 8).unwrap();
    for j in 0..5 {
        let col: Vec<f64> = draws.iter().map(|d| d.0[j]).collect();
        let (m, se) = mean_and_se(&col);
        assert!(m.abs() <= 4.0 * se, "component {j}: mean {m} se {se}");
    }
}

#[test]
fn monotone_samples_are_exact() {
    let grid = KnotGrid::new(&[(0.0, 1.0)], &[20]).unwrap();
    let params = KernelParams::new(2.0, vec![0.2]).unwrap();
    let cov = CovarianceMatrix::new(&grid, &params).unwrap();
    let specs = ConstraintSpec::parse_list("nonnegative,nonincreasing").unwrap();
    let system = build_constraint_system(&specs, &grid).unwrap();
    let init = system.feasible_point().to_vec();
    let problem =
        TmvnProblem { mean: vec![0.5; 20], covariance: &cov, system: &system, travel_time: DEFAULT_TRAVEL_TIME };
    let draws = sample_tmvn_hmc(&problem, &init, 2_000, 2).unwrap();
    let tol = 1e-9 * 2f64.sqrt();
    for d in &draws {
        assert!(check_satisfied(&system, &d.0, tol).unwrap());
        assert!(d.0.windows(2).all(|w| w[0] >= w[1] - tol));
    }
    let again = sample_tmvn_hmc(&problem, &init, 2_000, 2).unwrap();
    assert_eq!(draws, again);
}
