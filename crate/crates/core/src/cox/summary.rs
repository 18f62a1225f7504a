use super::PosteriorChain;
use crate::error::{Error, Result};

/// Pointwise posterior mean and quantiles of the intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySummary {
    pub points: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub levels: Vec<f64>,
    /// `quantiles[i][k]` is the `levels[k]` quantile at `points[i]`.
    pub quantiles: Vec<Vec<f64>>,
}

/// Evaluates every retained sample at each query point and summarises the draws.
///
/// Quantiles interpolate linearly between order statistics.
pub fn posterior_intensity(chain: &PosteriorChain, query: &[Vec<f64>], levels: &[f64]) -> Result<IntensitySummary> {
    if chain.samples.is_empty() {
        return Err(Error::State("posterior chain holds no samples".into()));
    }
    if let Some(q) = levels.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::ParameterDomain(format!("quantile level {q} outside [0, 1]")));
    }
    let n = chain.samples.len();
    let mut mean = Vec::with_capacity(query.len());
    let mut quantiles = Vec::with_capacity(query.len());
    let mut values = vec![0.0; n];
    for x in query {
        let support = chain.grid.basis_support(x)?;
        for (v, s) in values.iter_mut().zip(&chain.samples) {
            *v = support.iter().map(|&(j, w)| w * s.0[j]).sum();
        }
        mean.push(values.iter().sum::<f64>() / n as f64);
        values.sort_by(f64::total_cmp);
        quantiles.push(levels.iter().map(|&q| sorted_quantile(&values, q)).collect());
    }
    Ok(IntensitySummary { points: query.to_vec(), mean, levels: levels.to_vec(), quantiles })
}

fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
