use cgpcox::finite_gp::evaluate_intensity;
use cgpcox::KnotGrid;

/// Composite trapezoid rule on a grid `refine` times finer than the knots.
pub fn dense_trapezoid(coeffs: &[f64], grid: &KnotGrid, refine: usize) -> f64 {
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..grid.dim())
        .map(|d| {
            let (a, b) = grid.bounds(d);
            let n = (grid.counts()[d] - 1) * refine + 1;
            let h = (b - a) / (n - 1) as f64;
            let pts = (0..n).map(|i| if i + 1 == n { b } else { a + h * i as f64 }).collect();
            let w = (0..n).map(|i| if i == 0 || i + 1 == n { h / 2.0 } else { h }).collect();
            (pts, w)
        })
        .collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; grid.dim()];
    loop {
        let x: Vec<f64> = idx.iter().enumerate().map(|(d, &i)| axes[d].0[i]).collect();
        let w: f64 = idx.iter().enumerate().map(|(d, &i)| axes[d].1[i]).product();
        total += w * evaluate_intensity(coeffs, grid, &x).unwrap();
        let mut d = grid.dim();
        loop {
            if d == 0 {
                return total;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < axes[d].0.len() {
                break;
            }
            idx[d] = 0;
        }
    }
}
