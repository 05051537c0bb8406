//! Tree-recovery evaluation: tie-corrected rank correlation against ground
//! truth, and the affinity-estimator convergence experiment.
//!
//! The ranking measure works sample by sample: for sample `i`, every other
//! sample is ranked by how soon it merges with `i` (ties share midranks),
//! once under the ground truth and once under the estimated dendrogram, and
//! the two rankings are compared with Kendall's tau-b. The reported score is
//! the mean over samples, with its standard error.

use rayon::prelude::*;

use crate::affinity::{affinity_cosine, affinity_data, affinity_pca, max_affinity_error};
use crate::dendrogram::{Dendrogram, MergeHeights};
use crate::error::{Error, Result};
use crate::genmodel::{sample_additive, true_dendrogram, TreeSpec};
use crate::spectral::pc_scores;

/// Per-sample categorical labels at one or more hierarchy levels, ordered
/// coarse to fine. Levels are not required to nest.
#[derive(Clone, Debug)]
pub struct LabelHierarchy {
    levels: Vec<Vec<String>>,
    n: usize,
}

impl LabelHierarchy {
    pub fn new(levels: Vec<Vec<String>>) -> Result<LabelHierarchy> {
        let Some(first) = levels.first() else {
            return Err(Error::InvalidArgument("no label levels".to_string()));
        };
        let n = first.len();
        if levels.iter().any(|l| l.len() != n) {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: 0,
            });
        }
        Ok(LabelHierarchy { levels, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

/// Midranks over the samples other than the anchor: `items[k]` has rank
/// `ranks[k]`, smaller rank = merges sooner; tied items share a value.
#[derive(Clone, Debug, PartialEq)]
pub struct TiedRanking {
    pub items: Vec<usize>,
    pub ranks: Vec<f64>,
}

/// Whether a larger merge value means an earlier merge (affinity heights)
/// or a later one (distance heights).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergeOrder {
    HigherIsCloser,
    LowerIsCloser,
}

/// Builds midranks from per-item closeness keys (larger = closer).
fn midranks_from_keys(mut keyed: Vec<(usize, f64)>) -> TiedRanking {
    keyed.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let k = keyed.len();
    let mut ranks_by_pos = vec![0.0f64; k];
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && keyed[end].1 == keyed[start].1 {
            end += 1;
        }
        let mid = (start + 1 + end) as f64 / 2.0; // mean of 1-based positions
        for pos in start..end {
            ranks_by_pos[pos] = mid;
        }
        start = end;
    }
    let mut pairs: Vec<(usize, f64)> = keyed
        .iter()
        .zip(&ranks_by_pos)
        .map(|(&(item, _), &r)| (item, r))
        .collect();
    pairs.sort_by_key(|&(item, _)| item);
    TiedRanking {
        items: pairs.iter().map(|&(item, _)| item).collect(),
        ranks: pairs.iter().map(|&(_, r)| r).collect(),
    }
}

/// Ground-truth ranking for sample `i` from labelled data: items sharing
/// `i`'s finest label come first, then those agreeing only at coarser
/// levels, then items sharing no label at all; midranks within groups.
pub fn rank_from_labels(h: &LabelHierarchy, i: usize) -> Result<TiedRanking> {
    if h.n < 3 {
        return Err(Error::TooSmall {
            what: "samples",
            min: 3,
            got: h.n,
        });
    }
    if i >= h.n {
        return Err(Error::InvalidArgument(format!("sample {} out of range", i)));
    }
    let keyed: Vec<(usize, f64)> = (0..h.n)
        .filter(|&j| j != i)
        .map(|j| {
            // Finest level at which the labels agree; -1 when none do.
            let mut key = -1.0;
            for (level, labels) in h.levels.iter().enumerate() {
                if labels[i] == labels[j] {
                    key = level as f64;
                }
            }
            (j, key)
        })
        .collect();
    Ok(midranks_from_keys(keyed))
}

fn rank_from_table(m: &MergeHeights, i: usize, order: MergeOrder) -> TiedRanking {
    let keyed: Vec<(usize, f64)> = (0..m.n())
        .filter(|&j| j != i)
        .map(|j| {
            let v = m.get(i, j);
            let key = match order {
                MergeOrder::HigherIsCloser => v,
                MergeOrder::LowerIsCloser => -v,
            };
            (j, key)
        })
        .collect();
    midranks_from_keys(keyed)
}

/// Ranking of all other samples by merge height with sample `i` in an
/// affinity-oriented dendrogram (higher merge height = merges sooner).
/// For distance-oriented comparator trees use
/// [`rank_from_dendrogram_by`] with [`MergeOrder::LowerIsCloser`].
pub fn rank_from_dendrogram(d: &Dendrogram, i: usize) -> Result<TiedRanking> {
    rank_from_dendrogram_by(d, i, MergeOrder::HigherIsCloser)
}

pub fn rank_from_dendrogram_by(d: &Dendrogram, i: usize, order: MergeOrder) -> Result<TiedRanking> {
    let m = MergeHeights::from_dendrogram(d)?;
    if i >= m.n() {
        return Err(Error::InvalidArgument(format!("sample {} out of range", i)));
    }
    Ok(rank_from_table(&m, i, order))
}

/// All per-sample rankings of a dendrogram, sharing one merge-height table.
pub fn rankings_from_dendrogram_by(d: &Dendrogram, order: MergeOrder) -> Result<Vec<TiedRanking>> {
    let m = MergeHeights::from_dendrogram(d)?;
    Ok((0..m.n()).map(|i| rank_from_table(&m, i, order)).collect())
}

pub fn rankings_from_dendrogram(d: &Dendrogram) -> Result<Vec<TiedRanking>> {
    rankings_from_dendrogram_by(d, MergeOrder::HigherIsCloser)
}

pub fn rankings_from_hierarchy(h: &LabelHierarchy) -> Result<Vec<TiedRanking>> {
    (0..h.n()).map(|i| rank_from_labels(h, i)).collect()
}

/// Tie-corrected Kendall rank correlation,
/// `(nc - nd) / sqrt((n0 - n1)(n0 - n2))`, computed in O(k log k) by
/// merge-sort inversion counting. A ranking with all items tied makes the
/// denominator zero and is an error, not a zero.
pub fn kendall_tau_b(x: &TiedRanking, y: &TiedRanking) -> Result<f64> {
    if x.items != y.items {
        return Err(Error::LeafSetMismatch(
            "rankings cover different items".to_string(),
        ));
    }
    let k = x.ranks.len();
    if k < 2 {
        return Err(Error::TooSmall {
            what: "ranked items",
            min: 2,
            got: k,
        });
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        x.ranks[a]
            .total_cmp(&x.ranks[b])
            .then(y.ranks[a].total_cmp(&y.ranks[b]))
    });

    let n0 = (k * (k - 1) / 2) as f64;
    let mut n1 = 0.0f64; // tie pairs in x
    let mut n3 = 0.0f64; // tie pairs in both jointly
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && x.ranks[order[end]] == x.ranks[order[start]] {
            end += 1;
        }
        let t = (end - start) as f64;
        n1 += t * (t - 1.0) / 2.0;
        let mut js = start;
        while js < end {
            let mut je = js + 1;
            while je < end && y.ranks[order[je]] == y.ranks[order[js]] {
                je += 1;
            }
            let tj = (je - js) as f64;
            n3 += tj * (tj - 1.0) / 2.0;
            js = je;
        }
        start = end;
    }
    let mut n2 = 0.0f64; // tie pairs in y
    {
        let mut ys: Vec<f64> = y.ranks.clone();
        ys.sort_by(f64::total_cmp);
        let mut s = 0;
        while s < k {
            let mut e = s + 1;
            while e < k && ys[e] == ys[s] {
                e += 1;
            }
            let t = (e - s) as f64;
            n2 += t * (t - 1.0) / 2.0;
            s = e;
        }
    }

    // Discordant pairs: strict inversions of y in x-order (x-ties sorted by
    // y contribute none).
    let seq: Vec<f64> = order.iter().map(|&idx| y.ranks[idx]).collect();
    let swaps = count_inversions(seq);

    let denom1 = n0 - n1;
    let denom2 = n0 - n2;
    if denom1 <= 0.0 || denom2 <= 0.0 {
        return Err(Error::DegenerateRanking);
    }
    let con_minus_dis = n0 - n1 - n2 + n3 - 2.0 * swaps;
    Ok((con_minus_dis / (denom1 * denom2).sqrt()).clamp(-1.0, 1.0))
}

fn count_inversions(mut seq: Vec<f64>) -> f64 {
    let mut buf = vec![0.0f64; seq.len()];
    fn rec(seq: &mut [f64], buf: &mut [f64]) -> f64 {
        let k = seq.len();
        if k <= 1 {
            return 0.0;
        }
        let mid = k / 2;
        let mut inv = {
            let (left, right) = seq.split_at_mut(mid);
            rec(left, &mut buf[..mid]) + rec(right, &mut buf[mid..])
        };
        let (mut i, mut j, mut out) = (0, mid, 0);
        while i < mid && j < k {
            if seq[j] < seq[i] {
                inv += (mid - i) as f64;
                buf[out] = seq[j];
                j += 1;
            } else {
                buf[out] = seq[i];
                i += 1;
            }
            out += 1;
        }
        buf[out..out + (mid - i)].copy_from_slice(&seq[i..mid]);
        let out2 = out + (mid - i);
        buf[out2..].copy_from_slice(&seq[j..]);
        seq.copy_from_slice(&buf[..k]);
        inv
    }
    rec(&mut seq, &mut buf)
}

/// Aggregate over per-sample tau values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanTau {
    pub mean: f64,
    /// Sample standard deviation divided by sqrt(#used).
    pub stderr: f64,
    pub used: usize,
    /// Samples whose comparison was degenerate (all ties on either side).
    pub excluded: usize,
}

pub(crate) fn aggregate_taus(taus: &[f64], excluded: usize) -> Result<MeanTau> {
    let used = taus.len();
    if used == 0 {
        return Err(Error::AllDegenerate);
    }
    let mean = taus.iter().sum::<f64>() / used as f64;
    let stderr = if used > 1 {
        let var = taus.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (used - 1) as f64;
        (var / used as f64).sqrt()
    } else {
        0.0
    };
    Ok(MeanTau {
        mean,
        stderr,
        used,
        excluded,
    })
}

/// Mean tau-b between per-sample ground-truth rankings and the rankings
/// induced by an estimated dendrogram whose leaves are the samples.
/// Degenerate samples are excluded and counted.
pub fn mean_tau_b(truth_rankings: &[TiedRanking], est: &Dendrogram) -> Result<MeanTau> {
    mean_tau_b_by(truth_rankings, est, MergeOrder::HigherIsCloser)
}

pub fn mean_tau_b_by(
    truth_rankings: &[TiedRanking],
    est: &Dendrogram,
    order: MergeOrder,
) -> Result<MeanTau> {
    let m = MergeHeights::from_dendrogram(est)?;
    let n = m.n();
    if truth_rankings.len() != n {
        return Err(Error::LeafSetMismatch(format!(
            "{} truth rankings for {} leaves",
            truth_rankings.len(),
            n
        )));
    }
    if n < 3 {
        return Err(Error::TooSmall {
            what: "samples",
            min: 3,
            got: n,
        });
    }
    let results: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|i| kendall_tau_b(&truth_rankings[i], &rank_from_table(&m, i, order)))
        .collect();
    let mut taus = Vec::with_capacity(n);
    let mut excluded = 0usize;
    for r in results {
        match r {
            Ok(t) => taus.push(t),
            Err(Error::DegenerateRanking) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    aggregate_taus(&taus, excluded)
}

/// Which affinity estimate feeds the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    Data,
    Pca,
    Cosine,
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<EstimatorKind> {
        match s {
            "data" => Ok(EstimatorKind::Data),
            "pca" => Ok(EstimatorKind::Pca),
            "cosine" => Ok(EstimatorKind::Cosine),
            other => Err(Error::Parse(format!("unknown estimator: {:?}", other))),
        }
    }
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Data => "data",
            EstimatorKind::Pca => "pca",
            EstimatorKind::Cosine => "cosine",
        }
    }
}

/// One grid point of the convergence experiment.
#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub n: usize,
    pub p: usize,
    pub estimator: EstimatorKind,
    pub mean_err: f64,
    /// Sample standard deviation of the per-seed max errors.
    pub std_err: f64,
    pub errors: Vec<f64>,
}

/// Rank of the analytic affinity matrix over the support set; the rank the
/// PCA estimator is entitled to under the model.
pub fn support_alpha_rank(spec: &TreeSpec) -> Result<usize> {
    let truth = true_dendrogram(spec)?;
    let k = spec.support.len();
    let mut mat = nalgebra::DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let m = truth.merge_height(spec.support[a], spec.support[b])?;
            mat[(a, b)] = m;
            mat[(b, a)] = m;
        }
    }
    let eig = mat
        .try_symmetric_eigen(1.0e-12, 100_000)
        .ok_or_else(|| Error::InvalidArgument("eigendecomposition did not converge".into()))?;
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if lmax == 0.0 {
        return Ok(0);
    }
    Ok(eig
        .eigenvalues
        .iter()
        .filter(|&&v| v.abs() > lmax * k as f64 * 1e-12)
        .count())
}

/// Runs `seeds` simulations per `(n, p)` grid point and reports the mean
/// and standard deviation of the max affinity-estimation error. For the PCA
/// estimator, `r` defaults to the analytic rank of the support affinities.
pub fn convergence_experiment(
    spec: &TreeSpec,
    grid: &[(usize, usize)],
    estimator: EstimatorKind,
    r: Option<usize>,
    seeds: usize,
    base_seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".to_string()));
    }
    if seeds == 0 {
        return Err(Error::InvalidArgument("seeds must be positive".to_string()));
    }
    spec.validate()?;
    let default_r = match estimator {
        EstimatorKind::Pca => match r {
            Some(r) => r,
            None => support_alpha_rank(spec)?.max(1),
        },
        _ => 0,
    };
    let mut rows = Vec::with_capacity(grid.len());
    for (gi, &(n, p)) in grid.iter().enumerate() {
        let errors: Vec<Result<f64>> = (0..seeds)
            .into_par_iter()
            .map(|s| {
                let run_seed = mix_seed(base_seed, gi as u64, s as u64);
                let draw = sample_additive(spec, n, p, run_seed)?;
                let est = match estimator {
                    EstimatorKind::Data => affinity_data(&draw.y),
                    EstimatorKind::Cosine => affinity_cosine(&draw.y)?,
                    EstimatorKind::Pca => {
                        let r_eff = default_r.min(n.min(p));
                        let scores = pc_scores(&draw.y, r_eff)?;
                        affinity_pca(&scores, p)?
                    }
                };
                max_affinity_error(&est, &draw.true_alpha)
            })
            .collect();
        let errors: Vec<f64> = errors.into_iter().collect::<Result<_>>()?;
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let std_err = if errors.len() > 1 {
            (errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
                / (errors.len() - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        rows.push(ConvergenceRow {
            n,
            p,
            estimator,
            mean_err: mean,
            std_err,
            errors,
        });
    }
    Ok(rows)
}

fn mix_seed(base: u64, grid_index: u64, seed_index: u64) -> u64 {
    let mut x = base ^ grid_index.rotate_left(40) ^ seed_index.rotate_left(20);
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}
