//! Uncentered principal component scores and data-splitting rank selection.
//!
//! Scores are projections onto the top eigenvectors of the uncentered
//! second-moment matrix `sum_i Y_i Y_i^T`. When `n <= p` (the regime of
//! interest) the eigendecomposition is done on the n x n Gram matrix and
//! mapped to feature space, never touching a p x p matrix.
//!
//! Rank selection splits the data in half, projects the first half onto its
//! own top-r eigenspace, and picks the r whose projected points are closest
//! in 1-Wasserstein distance to the held-out half. The Wasserstein order and
//! ground metric are a fixed choice here: order 1, Euclidean cost, solved
//! exactly.

use nalgebra::DMatrix;

use crate::affinity::{raw_dot, DataMatrix, ScoreMatrix};
use crate::error::{Error, Result};
use crate::transport::wasserstein_distance;

/// Outcome of Wasserstein rank selection: the chosen rank and the full
/// `(r, d_r)` curve that produced it.
#[derive(Clone, Debug)]
pub struct RankSelection {
    pub r_hat: usize,
    pub curve: Vec<(usize, f64)>,
}

/// Two candidate distances within this relative margin are treated as tied,
/// and ties resolve toward the smaller rank. Directions beyond the numeric
/// rank of the split half project to (bit-)identical point sets, so exact
/// ties are the expected way flat curve tails resolve.
const RANK_TIE_REL_TOL: f64 = 1e-9;

struct SortedEigen {
    /// Eigenvalues, descending, negatives clamped to zero.
    values: Vec<f64>,
    /// Column-major orthonormal eigenvectors aligned with `values`.
    vectors: DMatrix<f64>,
}

fn symmetric_eigen_sorted(mat: DMatrix<f64>) -> Result<SortedEigen> {
    let dim = mat.nrows();
    let eig = mat
        .try_symmetric_eigen(1.0e-12, 100_000)
        .ok_or_else(|| Error::InvalidArgument("eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let mut vectors = DMatrix::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    Ok(SortedEigen { values, vectors })
}

/// Gram matrix of a row range, each entry computed once and mirrored.
fn gram(y: &DataMatrix, rows: std::ops::Range<usize>) -> DMatrix<f64> {
    let k = rows.len();
    let start = rows.start;
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = raw_dot(y.row(start + i), y.row(start + j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Principal component scores for the top `r` eigenvectors of
/// `sum_i Y_i Y_i^T`. Dot products of score rows reproduce the rank-r
/// truncation of the Gram matrix.
pub fn pc_scores(y: &DataMatrix, r: usize) -> Result<ScoreMatrix> {
    let (n, p) = (y.n(), y.p());
    let max = n.min(p);
    if r < 1 || r > max {
        return Err(Error::RankOutOfRange { r, max });
    }
    if n <= p {
        // Gram route: G = U L U^T gives scores U_r L_r^(1/2), whose Gram is
        // exactly the best rank-r approximation of G.
        let eig = symmetric_eigen_sorted(gram(y, 0..n))?;
        let mut values = vec![0.0f64; n * r];
        for k in 0..r {
            let scale = eig.values[k].sqrt();
            for i in 0..n {
                values[i * r + k] = eig.vectors[(i, k)] * scale;
            }
        }
        Ok(ScoreMatrix::from_raw(n, r, values))
    } else {
        // Feature route for wide-sample data: eigenvectors of Y^T Y.
        let ym = DMatrix::from_row_slice(n, p, y.values());
        let eig = symmetric_eigen_sorted(ym.transpose() * &ym)?;
        let mut values = vec![0.0f64; n * r];
        for i in 0..n {
            for k in 0..r {
                values[i * r + k] = raw_dot(y.row(i), eig.vectors.column(k).as_slice());
            }
        }
        Ok(ScoreMatrix::from_raw(n, r, values))
    }
}

/// Wasserstein data-splitting rank selection.
///
/// Eigenvectors come from the first `ceil(n/2)` rows only; that half is
/// projected onto its top-r eigenspace and compared, as a point set in the
/// ambient space, against the untouched second half. The split is the given
/// row order; shuffle beforehand if the order carries structure.
pub fn select_rank_wasserstein(y: &DataMatrix, r_max: usize) -> Result<RankSelection> {
    let (n, p) = (y.n(), y.p());
    if n < 4 {
        return Err(Error::TooSmall {
            what: "samples",
            min: 4,
            got: n,
        });
    }
    let n1 = n.div_ceil(2);
    let cap = n1.min(p);
    if r_max < 1 || r_max > cap {
        return Err(Error::RankOutOfRange { r: r_max, max: cap });
    }
    let first_zero = (0..n1).all(|i| y.row(i).iter().all(|&v| v == 0.0));
    let second_zero = (n1..n).all(|i| y.row(i).iter().all(|&v| v == 0.0));
    if first_zero || second_zero {
        return Err(Error::DegenerateSplit);
    }

    let eig = symmetric_eigen_sorted(gram(y, 0..n1))?;
    // Directions with eigenvalues at rounding-noise level add nothing to the
    // projection; skipping them keeps the curve exactly flat past the
    // numeric rank.
    let rank_floor = eig.values[0] * n1 as f64 * f64::EPSILON * 100.0;

    let second: Vec<&[f64]> = (n1..n).map(|i| y.row(i)).collect();
    // Projected first half, built up one rank-one term at a time:
    // P_r = P_{r-1} + u_r (u_r^T Y_1).
    let mut projected = vec![0.0f64; n1 * p];
    let mut curve = Vec::with_capacity(r_max);
    let mut best: Option<(usize, f64)> = None;
    for r in 1..=r_max {
        let k = r - 1;
        if eig.values[k] > rank_floor {
            let mut t = vec![0.0f64; p];
            for i in 0..n1 {
                let c = eig.vectors[(i, k)];
                if c != 0.0 {
                    let row = y.row(i);
                    for (tv, &rv) in t.iter_mut().zip(row) {
                        *tv += c * rv;
                    }
                }
            }
            for i in 0..n1 {
                let c = eig.vectors[(i, k)];
                let out = &mut projected[i * p..(i + 1) * p];
                for (ov, &tv) in out.iter_mut().zip(&t) {
                    *ov += c * tv;
                }
            }
        }
        let rows: Vec<&[f64]> = (0..n1).map(|i| &projected[i * p..(i + 1) * p]).collect();
        let d_r = wasserstein_distance(&rows, &second)?;
        curve.push((r, d_r));
        let improves = match best {
            None => true,
            Some((_, b)) => d_r < b - RANK_TIE_REL_TOL * b,
        };
        if improves {
            best = Some((r, d_r));
        }
    }
    let (r_hat, _) = best.expect("curve is non-empty");
    Ok(RankSelection { r_hat, curve })
}
