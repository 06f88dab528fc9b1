//! Projection of full-model posterior draws onto predictor subsets.
//!
//! For a draw `(w, sigma2)` and submodel design `X_sub` (constant column
//! plus the selected predictors), the KL-optimal submodel parameters are
//!
//! ```text
//! w_sub      = argmin_v |X w - X_sub v|^2
//! sigma2_sub = sigma2 + |X w - X_sub w_sub|^2 / n
//! kl         = 0.5 * ln(sigma2_sub / sigma2)
//! ```
//!
//! i.e. least squares against the full model's fit rather than against `y`.
//! The discrepancy of a submodel is the mean of `kl` over draws.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::PivotedQr;
use crate::sampler::DrawSet;

/// Designs whose smallest-to-largest R diagonal ratio falls below this are rejected.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A predictor subset. Indices are 1-based predictor positions; the
/// intercept (index 0) is always included implicitly.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Submodel {
    indices: Vec<usize>,
}

impl Submodel {
    /// Sorts `indices`; rejects duplicates and anything outside `1..=m`.
    pub fn new(mut indices: Vec<usize>, m: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("duplicate predictor index {}", w[0])));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > m) {
            return Err(Error::InvalidArgument(format!("predictor index {bad} outside 1..={m}")));
        }
        Ok(Submodel { indices })
    }

    /// Intercept-only model.
    pub fn empty() -> Self {
        Submodel::default()
    }

    pub fn full(m: usize) -> Self {
        Submodel {
            indices: (1..=m).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Design columns: 0 followed by the predictor indices.
    pub fn design_columns(&self) -> Vec<usize> {
        std::iter::once(0).chain(self.indices.iter().copied()).collect()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn with(&self, index: usize) -> Submodel {
        let mut indices = self.indices.clone();
        if let Err(pos) = indices.binary_search(&index) {
            indices.insert(pos, index);
        }
        Submodel { indices }
    }
}

/// Projection of one draw.
#[derive(Clone, Debug, PartialEq)]
pub struct DrawProjection {
    /// Intercept first, then the submodel's predictors in index order.
    pub w_perp: Vec<f64>,
    pub sigma2_perp: f64,
    pub kl: f64,
}

fn factor_checked(x_sub: DMatrix<f64>, sub: &Submodel) -> Result<PivotedQr> {
    let qr = PivotedQr::new(x_sub);
    let ratio = qr.diagonal_ratio();
    if ratio < RANK_TOLERANCE || !ratio.is_finite() {
        return Err(Error::RankDeficient {
            indices: sub.indices.clone(),
            ratio,
        });
    }
    Ok(qr)
}

/// Projects a single draw given the full design `x` (`n × (m+1)`, constant
/// column first).
pub fn project_draw(x: &DMatrix<f64>, w: &[f64], sigma2: f64, sub: &Submodel) -> Result<DrawProjection> {
    let (n, p) = x.shape();
    if w.len() != p {
        return Err(Error::Dimension(format!("{} weights for {p} design columns", w.len())));
    }
    if sub.indices.last().is_some_and(|&i| i >= p) {
        return Err(Error::Dimension(format!(
            "submodel {:?} exceeds m = {}",
            sub.indices,
            p - 1
        )));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
    }
    let fit = x * DVector::from_column_slice(w);
    let x_sub = x.select_columns(sub.design_columns().iter());
    let qr = factor_checked(x_sub.clone(), sub)?;
    let mut qtf = DMatrix::from_column_slice(n, 1, fit.as_slice());
    qr.apply_qt(&mut qtf);
    let w_perp = qr.solve_upper(&qtf);
    let residual = (&fit - &x_sub * &w_perp).norm_squared();
    let sigma2_perp = sigma2 + residual / n as f64;
    Ok(DrawProjection {
        w_perp: w_perp.iter().copied().collect(),
        sigma2_perp,
        kl: 0.5 * (sigma2_perp / sigma2).ln(),
    })
}

/// Projections of every draw onto one submodel.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionResult {
    pub submodel: Submodel,
    /// `S × (k+1)`, intercept first.
    pub w_perp: DMatrix<f64>,
    pub sigma2_perp: Vec<f64>,
    pub kl: Vec<f64>,
    pub discrepancy: f64,
    /// Predictor count of the full model.
    pub m: usize,
}

/// Reusable projection context for one dataset and draw set.
///
/// The full design is factored once as `X = Q1 C`; since `Q1` has
/// orthonormal columns every least-squares problem against the fits `X w_s`
/// can be solved in the `min(n, m+1)`-dimensional coordinates `C`. Each
/// submodel then needs one small factorization shared by all draws.
pub struct Projector {
    coords: DMatrix<f64>,
    fitted: DMatrix<f64>,
    sigma2: Vec<f64>,
    n: usize,
    m: usize,
}

impl Projector {
    pub fn new(ds: &Dataset, dr: &DrawSet) -> Result<Self> {
        if dr.m() != ds.m() {
            return Err(Error::Dimension(format!(
                "draws have {} predictors, dataset has {}",
                dr.m(),
                ds.m()
            )));
        }
        let qr = PivotedQr::new(ds.design());
        let coords = qr.reduced_factor();
        let fitted = &coords * dr.weights().transpose();
        Ok(Projector {
            coords,
            fitted,
            sigma2: dr.sigma2().to_vec(),
            n: ds.n(),
            m: ds.m(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn draws(&self) -> usize {
        self.sigma2.len()
    }

    fn validate(&self, sub: &Submodel) -> Result<()> {
        match sub.indices.last() {
            Some(&i) if i > self.m => Err(Error::Dimension(format!("submodel index {i} exceeds m = {}", self.m))),
            _ => Ok(()),
        }
    }

    /// Factor and `Qᵀ G` for the submodel, where `G` holds the reduced fits.
    fn rotate(&self, sub: &Submodel) -> Result<(PivotedQr, DMatrix<f64>)> {
        self.validate(sub)?;
        let cols = sub.design_columns();
        if cols.len() > self.coords.nrows() {
            return Err(Error::RankDeficient {
                indices: sub.indices.clone(),
                ratio: 0.0,
            });
        }
        let qr = factor_checked(self.coords.select_columns(cols.iter()), sub)?;
        let mut rotated = self.fitted.clone();
        qr.apply_qt(&mut rotated);
        Ok((qr, rotated))
    }

    fn sigma2_and_kl(&self, rotated: &DMatrix<f64>, k1: usize) -> (Vec<f64>, Vec<f64>) {
        let r = rotated.nrows();
        let n = self.n as f64;
        let sigma2_perp: Vec<f64> = rotated
            .column_iter()
            .zip(&self.sigma2)
            .map(|(col, s2)| s2 + col.rows_range(k1..r).norm_squared() / n)
            .collect();
        let kl = sigma2_perp
            .iter()
            .zip(&self.sigma2)
            .map(|(sp, s)| 0.5 * (sp / s).ln())
            .collect();
        (sigma2_perp, kl)
    }

    pub fn project(&self, sub: &Submodel) -> Result<ProjectionResult> {
        let (qr, rotated) = self.rotate(sub)?;
        let k1 = sub.len() + 1;
        let w_perp = qr.solve_upper(&rotated.rows(0, k1).into_owned()).transpose();
        let (sigma2_perp, kl) = self.sigma2_and_kl(&rotated, k1);
        let discrepancy = kl.iter().sum::<f64>() / kl.len() as f64;
        Ok(ProjectionResult {
            submodel: sub.clone(),
            w_perp,
            sigma2_perp,
            kl,
            discrepancy,
            m: self.m,
        })
    }

    /// Per-draw KL only, skipping the weight back-substitution.
    pub fn kl(&self, sub: &Submodel) -> Result<Vec<f64>> {
        let (_, rotated) = self.rotate(sub)?;
        Ok(self.sigma2_and_kl(&rotated, sub.len() + 1).1)
    }

    pub fn discrepancy(&self, sub: &Submodel) -> Result<f64> {
        let kl = self.kl(sub)?;
        Ok(kl.iter().sum::<f64>() / kl.len() as f64)
    }
}

pub fn project_drawset(ds: &Dataset, dr: &DrawSet, sub: &Submodel) -> Result<ProjectionResult> {
    Projector::new(ds, dr)?.project(sub)
}

/// Gaussian predictive moments: `mean[(i, s)]` for row `i` under draw `s`,
/// and the per-draw variance shared by all rows.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveMoments {
    pub mean: DMatrix<f64>,
    pub variance: Vec<f64>,
}

impl PredictiveMoments {
    pub fn rows(&self) -> usize {
        self.mean.nrows()
    }

    pub fn draws(&self) -> usize {
        self.mean.ncols()
    }
}

/// Anything that yields per-draw Gaussian predictions for new rows.
pub trait PredictiveSource {
    /// `x` holds predictor rows without the constant column.
    fn predictive_moments(&self, x: &DMatrix<f64>) -> Result<PredictiveMoments>;
}

fn moments(x: &DMatrix<f64>, weights: &DMatrix<f64>, variance: &[f64]) -> PredictiveMoments {
    let (rows, k) = x.shape();
    let design = DMatrix::from_fn(rows, k + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    PredictiveMoments {
        mean: design * weights.transpose(),
        variance: variance.to_vec(),
    }
}

impl PredictiveSource for DrawSet {
    fn predictive_moments(&self, x: &DMatrix<f64>) -> Result<PredictiveMoments> {
        if x.ncols() != self.m() {
            return Err(Error::Dimension(format!(
                "{} columns for a model with {} predictors",
                x.ncols(),
                self.m()
            )));
        }
        Ok(moments(x, self.weights(), self.sigma2()))
    }
}

impl PredictiveSource for ProjectionResult {
    /// Accepts either all `m` predictors (the submodel's columns are picked
    /// out) or exactly the submodel's `k` columns.
    fn predictive_moments(&self, x: &DMatrix<f64>) -> Result<PredictiveMoments> {
        let k = self.submodel.len();
        let reduced;
        let xs = if x.ncols() == self.m {
            reduced = x.select_columns(self.submodel.indices.iter().map(|i| i - 1).collect::<Vec<_>>().iter());
            &reduced
        } else if x.ncols() == k {
            x
        } else {
            return Err(Error::Dimension(format!(
                "{} columns for a submodel of {k} predictors out of {}",
                x.ncols(),
                self.m
            )));
        };
        Ok(moments(xs, &self.w_perp, &self.sigma2_perp))
    }
}

impl ProjectionResult {
    pub fn draws(&self) -> usize {
        self.kl.len()
    }

    /// Interchange text: a `# submodel:` line, then
    /// `sigma2,w0,w<i>...,kl` with one row per draw.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let idx: Vec<String> = self.submodel.indices.iter().map(ToString::to_string).collect();
        writeln!(out, "# submodel: {}", idx.join(","))?;
        let mut head = String::from("sigma2,w0");
        for i in &self.submodel.indices {
            let _ = write!(head, ",w{i}");
        }
        writeln!(out, "{head},kl")?;
        for s in 0..self.draws() {
            let mut line = format!("{:.16e}", self.sigma2_perp[s]);
            for v in self.w_perp.row(s).iter() {
                let _ = write!(line, ",{v:.16e}");
            }
            let _ = write!(line, ",{:.16e}", self.kl[s]);
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Inverse of [`ProjectionResult::write`].
    pub fn read<R: BufRead>(input: R, m: usize) -> Result<ProjectionResult> {
        let mut lines = input.lines();
        let mut next =
            || -> Result<Option<String>> { lines.next().transpose().map_err(|e| Error::io("<projection>", e)) };
        let bad = |row: usize, msg: String| Error::DrawFormat { row, message: msg };
        let first = next()?.ok_or_else(|| bad(0, "empty projection file".into()))?;
        let list = first
            .strip_prefix("# submodel:")
            .ok_or_else(|| bad(0, "missing `# submodel:` line".into()))?
            .trim();
        let indices = if list.is_empty() {
            Vec::new()
        } else {
            list.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| bad(0, format!("bad index `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        let submodel = Submodel::new(indices, m)?;
        let k1 = submodel.len() + 1;
        let _header = next()?.ok_or_else(|| bad(0, "missing header".into()))?;
        let mut rows = Vec::new();
        while let Some(line) = next()? {
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad(rows.len() + 1, "non-numeric value".into()))?;
            if vals.len() != k1 + 2 {
                return Err(bad(rows.len() + 1, format!("expected {} values", k1 + 2)));
            }
            rows.push(vals);
        }
        let s = rows.len();
        if s == 0 {
            return Err(bad(0, "no draws".into()));
        }
        let w_perp = DMatrix::from_fn(s, k1, |i, j| rows[i][j + 1]);
        let sigma2_perp: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let kl: Vec<f64> = rows.iter().map(|r| r[k1 + 1]).collect();
        let discrepancy = kl.iter().sum::<f64>() / s as f64;
        Ok(ProjectionResult {
            submodel,
            w_perp,
            sigma2_perp,
            kl,
            discrepancy,
            m,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthogonal_case() -> (DMatrix<f64>, Vec<f64>) {
        let x = DMatrix::from_row_slice(
            4,
            3,
            &[
                1.0, 1.0, 1.0, //
                1.0, -1.0, 1.0, //
                1.0, 1.0, -1.0, //
                1.0, -1.0, -1.0,
            ],
        );
        (x, vec![0.0, 2.0, 1.0])
    }

    #[test]
    fn orthogonal_hand_computation() {
        let (x, w) = orthogonal_case();
        let sub = Submodel::new(vec![1], 2).unwrap();
        let p = project_draw(&x, &w, 1.0, &sub).unwrap();
        assert!(p.w_perp[0].abs() < 1e-14);
        assert!((p.w_perp[1] - 2.0).abs() < 1e-14);
        assert!((p.sigma2_perp - 2.0).abs() < 1e-14);
        assert!((p.kl - 0.5 * 2f64.ln()).abs() < 1e-14);
        assert!((p.kl - 0.3466).abs() < 1e-4);
    }

    #[test]
    fn full_projection_is_identity() {
        let (x, w) = orthogonal_case();
        let p = project_draw(&x, &w, 0.7, &Submodel::full(2)).unwrap();
        for (a, b) in p.w_perp.iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(p.sigma2_perp, 0.7);
        assert_eq!(p.kl, 0.0);
    }

    #[test]
    fn rank_deficient_subset_is_named() {
        let mut x = orthogonal_case().0;
        let c1 = x.column(1).clone_owned();
        x = x.insert_column(3, 0.0);
        x.set_column(3, &c1);
        let sub = Submodel::new(vec![1, 3], 3).unwrap();
        match project_draw(&x, &[0.0, 1.0, 1.0, 1.0], 1.0, &sub) {
            Err(Error::RankDeficient { indices, .. }) => assert_eq!(indices, vec![1, 3]),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn submodel_validation() {
        assert!(Submodel::new(vec![2, 2], 3).is_err());
        assert!(Submodel::new(vec![0], 3).is_err());
        assert!(Submodel::new(vec![4], 3).is_err());
        let s = Submodel::new(vec![3, 1], 3).unwrap();
        assert_eq!(s.indices(), &[1, 3]);
        assert_eq!(s.design_columns(), vec![0, 1, 3]);
        assert_eq!(s.with(2).indices(), &[1, 2, 3]);
        assert!(Submodel::empty().is_empty());
    }
}
