//! Householder QR with column-norm pivoting.
//!
//! nalgebra's `ColPivQR` pivots on the largest single entry rather than the
//! largest remaining column norm, so its diagonal is not rank revealing.
//! The projection and sampler code both need a trustworthy diagonal ratio,
//! hence this small factorization.

use nalgebra::{DMatrix, DVector};

/// `A P = Q R`, with `Q` stored as Householder vectors.
#[derive(Clone, Debug)]
pub struct PivotedQr {
    rows: usize,
    cols: usize,
    /// Householder vectors on and below the diagonal, strict upper part of R above it.
    packed: DMatrix<f64>,
    betas: Vec<f64>,
    diag: Vec<f64>,
    /// `perm[j]` is the original column placed at position `j`.
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn new(a: DMatrix<f64>) -> Self {
        let (rows, cols) = a.shape();
        let steps = rows.min(cols);
        let mut packed = a;
        let mut perm: Vec<usize> = (0..cols).collect();
        let mut betas = vec![0.0; steps];
        let mut diag = vec![0.0; steps];

        for j in 0..steps {
            // Norms are recomputed rather than downdated; the matrices here are small.
            let mut best = j;
            let mut best_norm = -1.0;
            for c in j..cols {
                let s = &packed.as_slice()[c * rows + j..(c + 1) * rows];
                let nrm: f64 = s.iter().map(|x| x * x).sum();
                if nrm > best_norm {
                    best_norm = nrm;
                    best = c;
                }
            }
            if best != j {
                packed.swap_columns(j, best);
                perm.swap(j, best);
            }

            let data = packed.as_mut_slice();
            let (head, tail) = data.split_at_mut((j + 1) * rows);
            let v = &mut head[j * rows + j..];
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vtv: f64 = v.iter().map(|x| x * x).sum();
            let beta = 2.0 / vtv;
            betas[j] = beta;
            diag[j] = alpha;

            for c in 0..cols - j - 1 {
                let col = &mut tail[c * rows + j..(c + 1) * rows];
                reflect(v, beta, col);
            }
        }

        PivotedQr {
            rows,
            cols,
            packed,
            betas,
            diag,
            perm,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Diagonal of `R`, non-increasing in magnitude.
    pub fn r_diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `|r_min| / |r_max|` over the full column count; zero when `cols > rows`.
    pub fn diagonal_ratio(&self) -> f64 {
        if self.cols == 0 {
            return 1.0;
        }
        if self.cols > self.rows {
            return 0.0;
        }
        let first = self.diag[0].abs();
        if first == 0.0 {
            return 0.0;
        }
        self.diag[self.cols - 1].abs() / first
    }

    pub fn is_full_rank(&self, tol: f64) -> bool {
        self.diagonal_ratio() >= tol
    }

    fn apply_qt_columns(&self, data: &mut [f64], ncols: usize) {
        let rows = self.rows;
        debug_assert_eq!(data.len(), rows * ncols);
        let src = self.packed.as_slice();
        for (j, &beta) in self.betas.iter().enumerate() {
            if beta == 0.0 {
                continue;
            }
            let v = &src[j * rows + j..(j + 1) * rows];
            for c in 0..ncols {
                reflect(v, beta, &mut data[c * rows + j..(c + 1) * rows]);
            }
        }
    }

    /// Overwrites `b` with `Qᵀ b`.
    pub fn apply_qt(&self, b: &mut DMatrix<f64>) {
        assert_eq!(b.nrows(), self.rows, "row count mismatch in Qᵀb");
        let ncols = b.ncols();
        self.apply_qt_columns(b.as_mut_slice(), ncols);
    }

    pub fn apply_qt_vec(&self, b: &mut DVector<f64>) {
        assert_eq!(b.nrows(), self.rows, "row count mismatch in Qᵀb");
        self.apply_qt_columns(b.as_mut_slice(), 1);
    }

    /// Solves `R z = c` for the leading `cols` rows of `c` and returns `P z`,
    /// i.e. the least-squares solution when `c = Qᵀ b`.
    ///
    /// Requires `cols <= rows` and a nonzero diagonal.
    pub fn solve_upper(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.cols;
        assert!(p <= self.rows && c.nrows() >= p);
        let rows = self.rows;
        let src = self.packed.as_slice();
        let mut out = DMatrix::zeros(p, c.ncols());
        let mut z = vec![0.0; p];
        for k in 0..c.ncols() {
            for i in (0..p).rev() {
                let mut acc = c[(i, k)];
                for (j, zj) in z.iter().enumerate().take(p).skip(i + 1) {
                    acc -= src[j * rows + i] * zj;
                }
                z[i] = acc / self.diag[i];
            }
            for (i, &zi) in z.iter().enumerate() {
                out[(self.perm[i], k)] = zi;
            }
        }
        out
    }

    /// `R Pᵀ` as a `min(rows, cols) × cols` matrix, so that `A = Q₁ (R Pᵀ)`
    /// with `Q₁` the thin orthonormal factor.
    pub fn reduced_factor(&self) -> DMatrix<f64> {
        let r = self.rows.min(self.cols);
        let rows = self.rows;
        let src = self.packed.as_slice();
        let mut out = DMatrix::zeros(r, self.cols);
        for j in 0..self.cols {
            let dst = self.perm[j];
            for i in 0..r.min(j + 1) {
                out[(i, dst)] = if i == j { self.diag[i] } else { src[j * rows + i] };
            }
        }
        out
    }
}

#[inline]
fn reflect(v: &[f64], beta: f64, x: &mut [f64]) {
    let s: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() * beta;
    if s != 0.0 {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi -= s * vi;
        }
    }
}
