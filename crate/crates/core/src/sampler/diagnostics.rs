use serde::{Deserialize, Serialize};

use crate::stats::{mean, sample_variance};

pub const RHAT_THRESHOLD: f64 = 1.05;

/// Split-chain potential scale reduction for one scalar quantity.
///
/// Each chain is cut into two halves (the middle draw is dropped for odd
/// lengths). Returns NaN when fewer than two draws per half are available.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let len = chains.iter().map(Vec::len).min().unwrap_or(0);
    let half = len / 2;
    if half < 2 || chains.is_empty() {
        return f64::NAN;
    }
    let mut pieces: Vec<&[f64]> = Vec::with_capacity(2 * chains.len());
    for c in chains {
        pieces.push(&c[..half]);
        pieces.push(&c[len - half..len]);
    }
    let means: Vec<f64> = pieces.iter().map(|p| mean(p)).collect();
    let within = mean(&pieces.iter().map(|p| sample_variance(p)).collect::<Vec<_>>());
    let between = half as f64 * sample_variance(&means);
    if within == 0.0 {
        return if between == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let n = half as f64;
    let var_plus = (n - 1.0) / n * within + between / n;
    (var_plus / within).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// One entry per weight, intercept first.
    pub rhat: Vec<f64>,
    pub max_rhat: f64,
    pub threshold: f64,
    /// All R-hat values finite and below `threshold`.
    pub converged: bool,
}

impl Diagnostics {
    /// `per_weight[j][c]` holds chain `c`'s retained draws of weight `j`.
    pub fn from_chains(per_weight: &[Vec<Vec<f64>>]) -> Self {
        let rhat: Vec<f64> = per_weight.iter().map(|chains| split_rhat(chains)).collect();
        let max_rhat = rhat.iter().copied().fold(f64::NEG_INFINITY, |a, b| {
            if b.is_nan() || a.is_nan() {
                f64::NAN
            } else {
                a.max(b)
            }
        });
        let converged = rhat.iter().all(|r| r.is_finite() && *r < RHAT_THRESHOLD);
        Diagnostics {
            rhat,
            max_rhat,
            threshold: RHAT_THRESHOLD,
            converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_stationary_chains() {
        let chain: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64).collect();
        let r = split_rhat(&[chain.clone(), chain.clone()]);
        assert!((r - 1.0).abs() < 0.05, "{r}");
    }

    #[test]
    fn separated_chains_flagged() {
        let a: Vec<f64> = (0..100).map(|i| (i % 7) as f64 * 0.1).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        assert!(split_rhat(&[a, b]) > 2.0);
    }

    #[test]
    fn trend_within_chain_flagged() {
        let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
        assert!(split_rhat(&[a]) > 1.5);
    }

    #[test]
    fn too_short_is_nan() {
        assert!(split_rhat(&[vec![1.0, 2.0, 3.0]]).is_nan());
        let d = Diagnostics::from_chains(&[vec![vec![1.0, 2.0]]]);
        assert!(!d.converged);
    }
}
