//! Forward selection of predictors by projection discrepancy.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::projection::{Projector, Submodel};
use crate::sampler::DrawSet;

/// Candidates whose discrepancies differ by at most this much count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Largest number of subsets [`exhaustive_best`] will evaluate.
pub const EXHAUSTIVE_BUDGET: u128 = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchPath {
    /// 1-based predictor indices in the order they were added.
    pub order: Vec<usize>,
    pub names: Vec<String>,
    /// Entry `j` is the discrepancy of the first `j` variables; entry 0 is
    /// the intercept-only model.
    pub discrepancy_trace: Vec<f64>,
    /// Set when the search stopped early because every remaining candidate
    /// was rank-deficient.
    #[serde(default)]
    pub truncated: bool,
}

impl SearchPath {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The submodel made of the first `j` selected variables.
    pub fn prefix(&self, j: usize) -> Submodel {
        let mut idx = self.order[..j].to_vec();
        idx.sort_unstable();
        Submodel::new(idx, usize::MAX).expect("search path holds distinct valid indices")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Scores every submodel in `subsets`; rank-deficient ones come back as `None`.
fn score_all(proj: &Projector, subsets: &[Submodel]) -> Result<Vec<Option<f64>>> {
    subsets
        .par_iter()
        .map(|sub| match proj.discrepancy(sub) {
            Ok(d) => Ok(Some(d)),
            Err(Error::RankDeficient { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Position of the first score within [`TIE_TOLERANCE`] of the minimum.
fn pick(scores: &[Option<f64>]) -> Option<usize> {
    let best = scores.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    scores.iter().position(|s| s.is_some_and(|d| d <= best + TIE_TOLERANCE))
}

pub fn forward_search(ds: &Dataset, dr: &DrawSet, max_vars: usize) -> Result<SearchPath> {
    let m = ds.m();
    if max_vars < 1 || max_vars > m {
        return Err(Error::InvalidArgument(format!(
            "max_vars must lie in 1..={m}, got {max_vars}"
        )));
    }
    let proj = Projector::new(ds, dr)?;
    let mut current = Submodel::empty();
    let mut path = SearchPath {
        order: Vec::with_capacity(max_vars),
        names: Vec::with_capacity(max_vars),
        discrepancy_trace: vec![proj.discrepancy(&current)?],
        truncated: false,
    };
    for _ in 0..max_vars {
        let candidates: Vec<usize> = (1..=m).filter(|&j| !current.contains(j)).collect();
        let subsets: Vec<Submodel> = candidates.iter().map(|&j| current.with(j)).collect();
        let scores = score_all(&proj, &subsets)?;
        let Some(at) = pick(&scores) else {
            log::warn!(
                "every remaining candidate is rank-deficient; search stops at {} variables",
                path.order.len()
            );
            path.truncated = true;
            break;
        };
        let chosen = candidates[at];
        current = subsets[at].clone();
        path.order.push(chosen);
        path.names.push(ds.names()[chosen - 1].clone());
        path.discrepancy_trace
            .push(scores[at].expect("picked a scored candidate"));
    }
    Ok(path)
}

/// Advances `c` to the next `k`-combination of `1..=m` in lexicographic order.
fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < m - (k - 1 - i) {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Best subset of the given size by discrepancy, scanning all of them.
pub fn exhaustive_best(ds: &Dataset, dr: &DrawSet, size: usize) -> Result<Submodel> {
    let m = ds.m();
    if size > m {
        return Err(Error::InvalidArgument(format!("size {size} exceeds m = {m}")));
    }
    let count = binomial(m, size);
    if count > EXHAUSTIVE_BUDGET {
        return Err(Error::Budget(count, EXHAUSTIVE_BUDGET));
    }
    let mut subsets = Vec::with_capacity(count as usize);
    let mut c: Vec<usize> = (1..=size).collect();
    loop {
        subsets.push(Submodel::new(c.clone(), m)?);
        if !next_combination(&mut c, m) {
            break;
        }
    }
    let proj = Projector::new(ds, dr)?;
    let scores = score_all(&proj, &subsets)?;
    let at = pick(&scores).ok_or_else(|| Error::RankDeficient {
        indices: Vec::new(),
        ratio: 0.0,
    })?;
    Ok(subsets.swap_remove(at))
}
