//! Pairwise affinity and distance matrices.
//!
//! All constructors compute each off-diagonal entry once per unordered pair
//! and mirror it, so outputs are symmetric to exact bit equality no matter
//! how the work is scheduled. Long accumulations (dimension > 4096) use
//! pairwise blocked summation to keep rounding error from eating into the
//! stability margin of the clustering step.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Whether a symmetric matrix holds affinities (bigger = closer) or
/// distances (smaller = closer).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Affinity,
    Distance,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Affinity => "affinity",
            Mode::Distance => "distance",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "affinity" => Ok(Mode::Affinity),
            "distance" => Ok(Mode::Distance),
            other => Err(Error::Parse(format!("unknown matrix mode: {:?}", other))),
        }
    }
}

/// Dense row-major matrix of observations: `n` samples in `p` dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Requires `n >= 2`, `p >= 1`, `values.len() == n * p` and finite
    /// entries.
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<DataMatrix> {
        if n < 2 {
            return Err(Error::TooSmall {
                what: "samples",
                min: 2,
                got: n,
            });
        }
        if p < 1 {
            return Err(Error::TooSmall {
                what: "dimensions",
                min: 1,
                got: p,
            });
        }
        if values.len() != n * p {
            return Err(Error::ShapeMismatch {
                expected: n * p,
                got: values.len(),
            });
        }
        for (k, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: k / p,
                    col: k % p,
                });
            }
        }
        Ok(DataMatrix { n, p, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Symmetric `n x n` table of pairwise affinities or distances, diagonal
/// included.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    mode: Mode,
    values: Vec<f64>,
}

impl AffinityMatrix {
    /// Wraps raw values, checking symmetry and, in distance mode, the zero
    /// diagonal and non-negativity.
    pub fn from_values(n: usize, mode: Mode, values: Vec<f64>) -> Result<AffinityMatrix> {
        if values.len() != n * n {
            return Err(Error::ShapeMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if values[i * n + j] != values[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "asymmetric at ({}, {})",
                        i, j
                    )));
                }
            }
        }
        if mode == Mode::Distance {
            for i in 0..n {
                if values[i * n + i] != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "distance diagonal non-zero at {}",
                        i
                    )));
                }
            }
            if values.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidArgument("negative distance".to_string()));
            }
        }
        Ok(AffinityMatrix { n, mode, values })
    }

    /// Builds the matrix by evaluating `f` once per unordered pair (upper
    /// triangle plus diagonal, parallel over rows) and mirroring.
    pub(crate) fn build_symmetric<F>(n: usize, mode: Mode, f: F) -> AffinityMatrix
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let mut values = vec![0.0f64; n * n];
        values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in i..n {
                row[j] = f(i, j);
            }
        });
        for i in 1..n {
            for j in 0..i {
                values[i * n + j] = values[j * n + i];
            }
        }
        AffinityMatrix { n, mode, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Fraction of strictly negative off-diagonal entries. A non-negligible
    /// value signals data at odds with the non-negative-affinity model that
    /// motivates dot-product clustering.
    pub fn negative_offdiagonal_fraction(&self) -> f64 {
        let n = self.n;
        if n < 2 {
            return 0.0;
        }
        let mut neg = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                if self.values[i * n + j] < 0.0 {
                    neg += 1;
                }
            }
        }
        neg as f64 / (n * (n - 1) / 2) as f64
    }
}

/// Principal component scores: `n` samples projected to `r` dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    n: usize,
    r: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub(crate) fn from_raw(n: usize, r: usize, values: Vec<f64>) -> ScoreMatrix {
        debug_assert_eq!(values.len(), n * r);
        ScoreMatrix { n, r, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.r..(i + 1) * self.r]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

const SUM_BLOCK: usize = 4096;

fn kernel_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let quads = a.len() / 4;
    for k in 0..quads {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * quads..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

fn kernel_sqdist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let quads = a.len() / 4;
    for k in 0..quads {
        let i = 4 * k;
        let d0 = a[i] - b[i];
        let d1 = a[i + 1] - b[i + 1];
        let d2 = a[i + 2] - b[i + 2];
        let d3 = a[i + 3] - b[i + 3];
        acc[0] += d0 * d0;
        acc[1] += d1 * d1;
        acc[2] += d2 * d2;
        acc[3] += d3 * d3;
    }
    let mut tail = 0.0;
    for i in 4 * quads..a.len() {
        let d = a[i] - b[i];
        tail += d * d;
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

fn kernel_absdist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let quads = a.len() / 4;
    for k in 0..quads {
        let i = 4 * k;
        acc[0] += (a[i] - b[i]).abs();
        acc[1] += (a[i + 1] - b[i + 1]).abs();
        acc[2] += (a[i + 2] - b[i + 2]).abs();
        acc[3] += (a[i + 3] - b[i + 3]).abs();
    }
    let mut tail = 0.0;
    for i in 4 * quads..a.len() {
        tail += (a[i] - b[i]).abs();
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

/// Pairwise blocked reduction: blocks of 4096 are combined by recursive
/// halving, bounding the rounding error at O(log p) instead of O(p).
fn reduce_blocked(a: &[f64], b: &[f64], kernel: fn(&[f64], &[f64]) -> f64) -> f64 {
    let len = a.len();
    if len <= SUM_BLOCK {
        return kernel(a, b);
    }
    let blocks = len.div_ceil(SUM_BLOCK);
    let mid = (blocks / 2) * SUM_BLOCK;
    reduce_blocked(&a[..mid], &b[..mid], kernel) + reduce_blocked(&a[mid..], &b[mid..], kernel)
}

/// Mean-normalized dot product between two equal-length vectors:
/// `<a, b> / p`.
pub(crate) fn scaled_dot(a: &[f64], b: &[f64]) -> f64 {
    reduce_blocked(a, b, kernel_dot) / a.len() as f64
}

pub(crate) fn raw_dot(a: &[f64], b: &[f64]) -> f64 {
    reduce_blocked(a, b, kernel_dot)
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    reduce_blocked(a, b, kernel_sqdist).sqrt()
}

/// `alpha_data(i, j) = <Y_i, Y_j> / p`; the diagonal holds `|Y_i|^2 / p`.
pub fn affinity_data(y: &DataMatrix) -> AffinityMatrix {
    AffinityMatrix::build_symmetric(y.n(), Mode::Affinity, |i, j| scaled_dot(y.row(i), y.row(j)))
}

/// `alpha_pca(i, j) = <score_i, score_j> / p`, with `p` the ambient
/// dimension of the data the scores were computed from.
pub fn affinity_pca(scores: &ScoreMatrix, p: usize) -> Result<AffinityMatrix> {
    if p == 0 {
        return Err(Error::TooSmall {
            what: "ambient dimensions",
            min: 1,
            got: 0,
        });
    }
    Ok(AffinityMatrix::build_symmetric(
        scores.n(),
        Mode::Affinity,
        |i, j| reduce_blocked(scores.row(i), scores.row(j), kernel_dot) / p as f64,
    ))
}

/// Cosine affinity `<Y_i, Y_j> / (|Y_i| |Y_j|)`, clamped into [-1, 1]; the
/// diagonal is exactly 1. Rows of zero norm are rejected by name.
pub fn affinity_cosine(y: &DataMatrix) -> Result<AffinityMatrix> {
    let n = y.n();
    let mut norms = Vec::with_capacity(n);
    for i in 0..n {
        let norm = reduce_blocked(y.row(i), y.row(i), kernel_dot).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNormRow(i));
        }
        norms.push(norm);
    }
    Ok(AffinityMatrix::build_symmetric(
        n,
        Mode::Affinity,
        |i, j| {
            if i == j {
                1.0
            } else {
                let c = reduce_blocked(y.row(i), y.row(j), kernel_dot) / (norms[i] * norms[j]);
                c.clamp(-1.0, 1.0)
            }
        },
    ))
}

/// Metric for [`pairwise_distance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Manhattan,
}

/// Standard pairwise metric distances, zero diagonal, distance mode.
pub fn pairwise_distance(y: &DataMatrix, metric: Metric) -> AffinityMatrix {
    AffinityMatrix::build_symmetric(y.n(), Mode::Distance, |i, j| {
        if i == j {
            return 0.0;
        }
        match metric {
            Metric::Euclidean => reduce_blocked(y.row(i), y.row(j), kernel_sqdist).sqrt(),
            Metric::Manhattan => reduce_blocked(y.row(i), y.row(j), kernel_absdist),
        }
    })
}

/// Largest absolute off-diagonal discrepancy between two affinity matrices.
pub fn max_affinity_error(est: &AffinityMatrix, truth: &AffinityMatrix) -> Result<f64> {
    if est.n() != truth.n() {
        return Err(Error::ShapeMismatch {
            expected: truth.n(),
            got: est.n(),
        });
    }
    if est.mode() != Mode::Affinity {
        return Err(Error::ModeMismatch {
            expected: "affinity",
            got: est.mode().as_str(),
        });
    }
    if truth.mode() != Mode::Affinity {
        return Err(Error::ModeMismatch {
            expected: "affinity",
            got: truth.mode().as_str(),
        });
    }
    let n = est.n();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (est.get(i, j) - truth.get(i, j)).abs();
            if diff > worst {
                worst = diff;
            }
        }
    }
    Ok(worst)
}
