use cgpcox::point_process::{simulate_poisson, simulate_spec, IntensitySpec};

fn count_moments(spec: &IntensitySpec, reps: usize, seed: u64) -> (f64, f64) {
    let p = simulate_spec(spec, reps, seed).unwrap();
    let counts: Vec<f64> = p.counts().iter().map(|&c| c as f64).collect();
    let n = counts.len() as f64;
    let m = counts.iter().sum::<f64>() / n;
    let v = counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Simpson's rule with `n` (even) panels over the spec's simulation domain.
fn simpson(spec: &IntensitySpec, n: usize) -> f64 {
    let (a, b) = spec.simulation_domain()[0];
    let h = (b - a) / n as f64;
    let f = |i: usize| spec.eval(&[if i == n { b } else { a + h * i as f64 }]).unwrap();
    let mut s = f(0) + f(n);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
    }
    s * h / 3.0
}

#[test]
fn homogeneous_counts_are_poisson() {
    let spec = IntensitySpec::constant(&[(0.0, 1.0)], 3.0).unwrap();
    let (m, v) = count_moments(&spec, 10_000, 1);
    assert!((m / 3.0 - 1.0).abs() < 0.05, "mean {m}");
    assert!((v / 3.0 - 1.0).abs() < 0.05, "variance {v}");
}

#[test]
fn toy_counts_match_integrals() {
    for (id, exact) in [(1u8, None), (2, None), (3, Some(225.0))] {
        let spec = IntensitySpec::toy(id).unwrap();
        let integral = simpson(&spec, 200_000);
        if let Some(e) = exact {
            assert!((integral - e).abs() < 1e-6);
        }
        let reps = 1_000;
        let (m, _) = count_moments(&spec, reps, 40 + id as u64);
        let se = (integral / reps as f64).sqrt();
        assert!((m - integral).abs() <= 3.0 * se, "toy{id}: {m} vs {integral} ± {se}");
    }
}

#[test]
fn two_dimensional_thinning() {
    let spec = IntensitySpec::constant(&[(0.0, 2.0), (0.0, 1.0)], 5.0).unwrap();
    let p = simulate_spec(&spec, 2_000, 3).unwrap();
    let m = p.total_events() as f64 / 2_000.0;
    assert!((m - 10.0).abs() < 3.0 * (10.0f64 / 2_000.0).sqrt());
    assert!(p.events().all(|x| (0.0..=2.0).contains(&x[0]) && (0.0..=1.0).contains(&x[1])));
}

#[test]
fn custom_callable_intensity() {
    let p = simulate_poisson(|x| Ok(2.0 * x[0]), &[(0.0, 1.0)], 2.0, 5_000, 9).unwrap();
    let m = p.total_events() as f64 / 5_000.0;
    assert!((m - 1.0).abs() < 3.0 * (1.0f64 / 5_000.0).sqrt());
    let mean_x = p.events().map(|x| x[0]).sum::<f64>() / p.total_events() as f64;
    assert!((mean_x - 2.0 / 3.0).abs() < 0.01);
}
