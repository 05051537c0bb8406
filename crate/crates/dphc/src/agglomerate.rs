//! Agglomerative merge engines.
//!
//! [`cluster_dot`] merges the pair of clusters with the largest size-weighted
//! average affinity at every step, records internal heights equal to the
//! merge affinities, and finishes leaves at `max(parent height, self
//! affinity)`. [`cluster_generic`] runs the same machinery for comparator
//! linkages over distance matrices (UPGMA-style average, complete, single,
//! Ward).
//!
//! Two engines compute the same result:
//!
//! * a nearest-neighbor-chain engine, O(n^2) time and memory, valid because
//!   every supported update rule is reducible (a merge never brings the new
//!   cluster closer to a bystander than the merged pair was to each other);
//! * a naive O(n^3) engine that rescans the full table at every step,
//!   following the greedy definition literally. It is kept public as the
//!   reference the chain engine is checked against.
//!
//! Ties are broken toward the pair whose clusters contain the smallest
//! sample indices: the pair key is `(min cluster leader, max cluster
//! leader)` where a cluster's leader is its smallest member, and the
//! lexicographically smallest key wins. On tie-free input both engines
//! produce identical trees; under exact ties they may differ (the chain
//! engine discovers merges in a different order), so cross-engine
//! comparisons should use tie-free inputs.

use crate::affinity::{AffinityMatrix, Mode};
use crate::dendrogram::{Dendrogram, Node};
use crate::error::{Error, Result};

/// Cluster-to-cluster update rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Linkage {
    /// Size-weighted mean of the two merged clusters' values.
    Average,
    /// The least favorable value (smallest affinity / largest distance).
    Complete,
    /// The most favorable value (largest affinity / smallest distance).
    Single,
    /// Ward's variance-increase rule; requires squared-Euclidean distances.
    Ward,
}

impl std::str::FromStr for Linkage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Linkage> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            "ward" => Ok(Linkage::Ward),
            other => Err(Error::Parse(format!("unknown linkage: {:?}", other))),
        }
    }
}

/// Whether merging favors large affinities or small distances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    MaxAffinity,
    MinDistance,
}

/// One merge: the two sample sets joined and the linkage value at which
/// they joined.
#[derive(Clone, Debug, PartialEq)]
pub struct MergeStep {
    pub cluster_a: Vec<usize>,
    pub cluster_b: Vec<usize>,
    pub value: f64,
}

/// The full merge history: n-1 steps plus the block sizes of the partition
/// after each step (descending).
#[derive(Clone, Debug)]
pub struct MergeTrace {
    pub steps: Vec<MergeStep>,
    pub partition_sizes: Vec<Vec<usize>>,
    pub objective: Objective,
    /// Fraction of strictly negative off-diagonal input affinities; the
    /// model behind dot-product clustering implies non-negative affinities,
    /// so a large value here flags ill-matched data. Zero in distance mode.
    pub negative_input_fraction: f64,
}

impl MergeTrace {
    /// Linkage-matrix rows `(a, b, value, size)` in the usual convention:
    /// samples are clusters `0..n`, the cluster formed at step m gets id
    /// `n + m`, `size` is the size of the new cluster.
    pub fn linkage_rows(&self, n: usize) -> Result<Vec<(usize, usize, f64, usize)>> {
        if self.steps.len() + 1 != n.max(1) {
            return Err(Error::InvalidArgument(format!(
                "trace has {} steps for n={}",
                self.steps.len(),
                n
            )));
        }
        let mut dsu: Vec<usize> = (0..n).collect();
        fn find(dsu: &mut [usize], mut x: usize) -> usize {
            while dsu[x] != x {
                dsu[x] = dsu[dsu[x]];
                x = dsu[x];
            }
            x
        }
        let mut cluster_id: Vec<usize> = (0..n).collect();
        let mut rows = Vec::with_capacity(self.steps.len());
        for (m, step) in self.steps.iter().enumerate() {
            let ra = find(&mut dsu, step.cluster_a[0]);
            let rb = find(&mut dsu, step.cluster_b[0]);
            let (ia, ib) = (cluster_id[ra], cluster_id[rb]);
            let (lo, hi) = (ia.min(ib), ia.max(ib));
            rows.push((
                lo,
                hi,
                step.value,
                step.cluster_a.len() + step.cluster_b.len(),
            ));
            dsu[rb] = ra;
            cluster_id[ra] = n + m;
        }
        Ok(rows)
    }

    /// Checks the structural invariants: exactly n-1 steps, each merging two
    /// blocks of the previous partition; in max-affinity mode, values
    /// non-increasing.
    pub fn verify(&self, n: usize) -> Result<()> {
        if self.steps.len() != n.saturating_sub(1) {
            return Err(Error::InvalidArgument(format!(
                "expected {} steps, found {}",
                n.saturating_sub(1),
                self.steps.len()
            )));
        }
        let mut blocks: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let mut prev_value = None;
        for (m, step) in self.steps.iter().enumerate() {
            let ia = blocks.iter().position(|b| *b == step.cluster_a);
            let ib = blocks.iter().position(|b| *b == step.cluster_b);
            let (Some(ia), Some(ib)) = (ia, ib) else {
                return Err(Error::InvalidArgument(format!(
                    "step {} does not merge two current blocks",
                    m
                )));
            };
            if ia == ib {
                return Err(Error::InvalidArgument(format!(
                    "step {} merges a block with itself",
                    m
                )));
            }
            let (lo, hi) = (ia.min(ib), ia.max(ib));
            let b = blocks.remove(hi);
            let mut a = blocks.remove(lo);
            a.extend(b);
            a.sort_unstable();
            blocks.push(a);
            if self.objective == Objective::MaxAffinity {
                if let Some(prev) = prev_value {
                    if step.value > prev {
                        return Err(Error::InvalidArgument(format!(
                            "merge value increased at step {}",
                            m
                        )));
                    }
                }
                prev_value = Some(step.value);
            }
        }
        Ok(())
    }
}

/// Size-weighted average of two cluster-to-bystander values: the update
/// applied when clusters of sizes `u_size` and `v_size` merge.
pub fn linkage_update(u_size: usize, v_size: usize, a_u: f64, a_v: f64) -> f64 {
    let w = (u_size + v_size) as f64;
    (u_size as f64 / w) * a_u + (v_size as f64 / w) * a_v
}

#[allow(clippy::too_many_arguments)]
fn update_value(
    linkage: Linkage,
    objective: Objective,
    sa: usize,
    sb: usize,
    sx: usize,
    vax: f64,
    vbx: f64,
    vab: f64,
) -> f64 {
    match (linkage, objective) {
        (Linkage::Average, _) => linkage_update(sa, sb, vax, vbx),
        (Linkage::Single, Objective::MaxAffinity) => vax.max(vbx),
        (Linkage::Single, Objective::MinDistance) => vax.min(vbx),
        (Linkage::Complete, Objective::MaxAffinity) => vax.min(vbx),
        (Linkage::Complete, Objective::MinDistance) => vax.max(vbx),
        (Linkage::Ward, _) => {
            let (sa, sb, sx) = (sa as f64, sb as f64, sx as f64);
            ((sa + sx) * vax + (sb + sx) * vbx - sx * vab) / (sa + sb + sx)
        }
    }
}

fn better(objective: Objective, candidate: f64, incumbent: f64) -> bool {
    match objective {
        Objective::MaxAffinity => candidate > incumbent,
        Objective::MinDistance => candidate < incumbent,
    }
}

fn check_input(mat: &AffinityMatrix, linkage: Linkage, objective: Objective) -> Result<()> {
    let n = mat.n();
    if n < 2 {
        return Err(Error::TooSmall {
            what: "samples",
            min: 2,
            got: n,
        });
    }
    let expected = match objective {
        Objective::MaxAffinity => Mode::Affinity,
        Objective::MinDistance => Mode::Distance,
    };
    if mat.mode() != expected {
        return Err(Error::ModeMismatch {
            expected: expected.as_str(),
            got: mat.mode().as_str(),
        });
    }
    if linkage == Linkage::Ward && objective != Objective::MinDistance {
        return Err(Error::InvalidArgument(
            "ward linkage requires the min-distance objective".to_string(),
        ));
    }
    for i in 0..n {
        for j in 0..n {
            if mat.get(i, j).is_nan() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// A merge of the clusters led by samples `a` and `b` (`a < b`).
#[derive(Clone, Copy, Debug)]
struct RawStep {
    a: usize,
    b: usize,
    value: f64,
}

/// Nearest-neighbor-chain engine. Clusters live in the slot of their
/// smallest member, so slot order doubles as the tie-break order.
fn chain_engine(mat: &AffinityMatrix, linkage: Linkage, objective: Objective) -> Vec<RawStep> {
    let n = mat.n();
    let mut w = mat.values().to_vec();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    let mut steps = Vec::with_capacity(n - 1);

    while steps.len() < n - 1 {
        if chain.is_empty() {
            let first = (0..n).find(|&i| active[i]).expect("active cluster exists");
            chain.push(first);
        }
        loop {
            let c = *chain.last().unwrap();
            let prev = if chain.len() >= 2 {
                Some(chain[chain.len() - 2])
            } else {
                None
            };
            // Nearest neighbor of c; on ties prefer the predecessor in the
            // chain (guarantees termination), then the smallest slot.
            let mut best: Option<usize> = None;
            for j in 0..n {
                if j == c || !active[j] {
                    continue;
                }
                match best {
                    None => best = Some(j),
                    Some(bj) => {
                        let v = w[c * n + j];
                        let bv = w[c * n + bj];
                        if better(objective, v, bv)
                            || (v == bv && Some(j) == prev && Some(bj) != prev)
                        {
                            best = Some(j);
                        }
                    }
                }
            }
            let nn = best.expect("at least two active clusters");
            if Some(nn) == prev {
                chain.pop();
                chain.pop();
                let (a, b) = (c.min(nn), c.max(nn));
                let vab = w[a * n + b];
                steps.push(RawStep { a, b, value: vab });
                for x in 0..n {
                    if x == a || x == b || !active[x] {
                        continue;
                    }
                    let updated = update_value(
                        linkage,
                        objective,
                        size[a],
                        size[b],
                        size[x],
                        w[a * n + x],
                        w[b * n + x],
                        vab,
                    );
                    w[a * n + x] = updated;
                    w[x * n + a] = updated;
                }
                size[a] += size[b];
                active[b] = false;
                break;
            }
            chain.push(nn);
        }
    }

    // A stepwise dendrogram lists merges by value; for a reducible linkage
    // this ordering replays the greedy algorithm exactly (ties keep chain
    // discovery order).
    match objective {
        Objective::MaxAffinity => steps.sort_by(|x, y| y.value.total_cmp(&x.value)),
        Objective::MinDistance => steps.sort_by(|x, y| x.value.total_cmp(&y.value)),
    }
    steps
}

/// Naive reference engine: full-table rescan per step, lexicographic
/// tie-break on `(min leader, max leader)`. `inspect` is called after every
/// merge with the active clusters (sorted member lists) and an accessor for
/// the stored pairwise values, indexed by position in that cluster list.
fn naive_engine<F>(
    mat: &AffinityMatrix,
    linkage: Linkage,
    objective: Objective,
    mut inspect: F,
) -> Vec<RawStep>
where
    F: FnMut(usize, &[&[usize]], &dyn Fn(usize, usize) -> f64),
{
    let n = mat.n();
    let mut w = mat.values().to_vec();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut steps = Vec::with_capacity(n - 1);

    for m in 0..n - 1 {
        // Global scan; ascending (i, j) makes the first optimum the
        // lexicographically smallest tied pair.
        let mut best: Option<(usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                match best {
                    None => best = Some((i, j)),
                    Some((bi, bj)) => {
                        if better(objective, w[i * n + j], w[bi * n + bj]) {
                            best = Some((i, j));
                        }
                    }
                }
            }
        }
        let (a, b) = best.expect("two active clusters remain");
        let vab = w[a * n + b];
        steps.push(RawStep { a, b, value: vab });
        for x in 0..n {
            if x == a || x == b || !active[x] {
                continue;
            }
            let updated = update_value(
                linkage,
                objective,
                size[a],
                size[b],
                size[x],
                w[a * n + x],
                w[b * n + x],
                vab,
            );
            w[a * n + x] = updated;
            w[x * n + a] = updated;
        }
        size[a] += size[b];
        active[b] = false;
        let mut merged = std::mem::take(&mut members[b]);
        members[a].append(&mut merged);
        members[a].sort_unstable();

        let slots: Vec<usize> = (0..n).filter(|&s| active[s]).collect();
        let views: Vec<&[usize]> = slots.iter().map(|&s| members[s].as_slice()).collect();
        let get = |ci: usize, cj: usize| w[slots[ci] * n + slots[cj]];
        inspect(m, &views, &get);
    }
    steps
}

/// Builds the dendrogram and trace out of raw merge steps. Leaves are the
/// samples (ids `0..n`), internal vertices get ids `n + step`.
fn assemble(
    mat: &AffinityMatrix,
    steps: Vec<RawStep>,
    objective: Objective,
) -> Result<(Dendrogram, MergeTrace)> {
    let n = mat.n();
    let mut dsu: Vec<usize> = (0..n).collect();
    fn find(dsu: &mut [usize], mut x: usize) -> usize {
        while dsu[x] != x {
            dsu[x] = dsu[dsu[x]];
            x = dsu[x];
        }
        x
    }
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut top_node: Vec<usize> = (0..n).collect();
    let mut parent_of: Vec<Option<usize>> = vec![None; 2 * n - 1];
    let mut trace_steps = Vec::with_capacity(n - 1);
    let mut partition_sizes = Vec::with_capacity(n - 1);
    let mut internal_heights = Vec::with_capacity(n - 1);

    for (m, step) in steps.iter().enumerate() {
        let ra = find(&mut dsu, step.a);
        let rb = find(&mut dsu, step.b);
        debug_assert_ne!(ra, rb, "step joins an already-joined pair");
        let ma = std::mem::take(&mut members[ra]);
        let mb = std::mem::take(&mut members[rb]);
        trace_steps.push(MergeStep {
            cluster_a: ma.clone(),
            cluster_b: mb.clone(),
            value: step.value,
        });
        let node = n + m;
        parent_of[top_node[ra]] = Some(node);
        parent_of[top_node[rb]] = Some(node);
        internal_heights.push(step.value);

        let mut merged = ma;
        merged.extend(mb);
        merged.sort_unstable();
        dsu[rb] = ra;
        members[ra] = merged;
        top_node[ra] = node;

        // Taken member lists are left empty, so the non-empty ones are
        // exactly the current partition blocks.
        let mut sizes: Vec<usize> = members
            .iter()
            .filter(|m| !m.is_empty())
            .map(|m| m.len())
            .collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        partition_sizes.push(sizes);
    }

    let mut nodes = Vec::with_capacity(2 * n - 1);
    for (m, &h) in internal_heights.iter().enumerate() {
        nodes.push(Node::new(n + m, parent_of[n + m], h));
    }
    for i in 0..n {
        let parent = parent_of[i].expect("every sample is merged");
        let h = match objective {
            Objective::MaxAffinity => {
                let parent_height = internal_heights[parent - n];
                parent_height.max(mat.get(i, i))
            }
            Objective::MinDistance => 0.0,
        };
        nodes.push(Node::leaf(i, Some(parent), h, i));
    }
    let dend = Dendrogram::from_nodes(&nodes)?;
    let negative_input_fraction = match mat.mode() {
        Mode::Affinity => mat.negative_offdiagonal_fraction(),
        Mode::Distance => 0.0,
    };
    let trace = MergeTrace {
        steps: trace_steps,
        partition_sizes,
        objective,
        negative_input_fraction,
    };
    Ok((dend, trace))
}

/// Dot-product hierarchical clustering: repeatedly merge the distinct pair
/// with the largest affinity, updating by size-weighted average. Internal
/// heights are the merge affinities; leaf `i` ends at
/// `max(parent height, affinity(i, i))`. The returned dendrogram passes
/// [`Dendrogram::validate`].
pub fn cluster_dot(aff: &AffinityMatrix) -> Result<(Dendrogram, MergeTrace)> {
    cluster_generic(aff, Linkage::Average, Objective::MaxAffinity)
}

/// Naive reference of [`cluster_dot`]: O(n^3), follows the greedy definition
/// literally.
pub fn cluster_dot_reference(aff: &AffinityMatrix) -> Result<(Dendrogram, MergeTrace)> {
    cluster_generic_reference(aff, Linkage::Average, Objective::MaxAffinity)
}

/// Like [`cluster_dot_reference`], with a per-step inspection hook. After
/// every merge the hook receives the step index, the active clusters as
/// sorted member lists, and an accessor for the stored cluster-pair values
/// (indexed by position in the cluster list). Exists so tests can audit the
/// engine's internal state against first principles.
pub fn cluster_dot_reference_inspect<F>(
    aff: &AffinityMatrix,
    inspect: F,
) -> Result<(Dendrogram, MergeTrace)>
where
    F: FnMut(usize, &[&[usize]], &dyn Fn(usize, usize) -> f64),
{
    check_input(aff, Linkage::Average, Objective::MaxAffinity)?;
    let steps = naive_engine(aff, Linkage::Average, Objective::MaxAffinity, inspect);
    assemble(aff, steps, Objective::MaxAffinity)
}

/// Agglomerative clustering with a chosen linkage and objective. Heights
/// are the merge values, so min-distance trees carry the reversed height
/// orientation (children below parents) and do not pass validation; they
/// are comparator output, not model estimates.
pub fn cluster_generic(
    mat: &AffinityMatrix,
    linkage: Linkage,
    objective: Objective,
) -> Result<(Dendrogram, MergeTrace)> {
    check_input(mat, linkage, objective)?;
    let steps = chain_engine(mat, linkage, objective);
    assemble(mat, steps, objective)
}

/// Naive O(n^3) counterpart of [`cluster_generic`].
pub fn cluster_generic_reference(
    mat: &AffinityMatrix,
    linkage: Linkage,
    objective: Objective,
) -> Result<(Dendrogram, MergeTrace)> {
    check_input(mat, linkage, objective)?;
    let steps = naive_engine(mat, linkage, objective, |_, _, _| {});
    assemble(mat, steps, objective)
}

/// The k clusters obtained by undoing the last k-1 merges of an
/// affinity-oriented dendrogram whose leaves are the samples `0..n`.
/// Clusters are sorted by smallest member.
pub fn flat_cut(d: &Dendrogram, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = d
        .sample_leaf_count()
        .ok_or_else(|| Error::LeafSetMismatch("leaves are not the samples 0..n".to_string()))?;
    if k < 1 || k > n {
        return Err(Error::InvalidArgument(format!(
            "k={} out of range 1..={}",
            k, n
        )));
    }
    let root = d.root_id()?;
    let mut roots = vec![root];
    let mut count = 1usize;
    while count < k {
        // The most recent merge among current roots is the internal vertex
        // with the smallest height (merge values fall as the tree grows).
        let mut pick: Option<(f64, usize, usize)> = None; // (height, id, index)
        for (idx, &r) in roots.iter().enumerate() {
            if d.children_of(r)?.is_empty() {
                continue;
            }
            let h = d.height_of(r)?;
            let candidate = (h, r, idx);
            if pick.is_none_or(|p| (candidate.0, candidate.1) < (p.0, p.1)) {
                pick = Some(candidate);
            }
        }
        let Some((_, r, idx)) = pick else {
            return Err(Error::InvalidArgument(format!(
                "cannot reach {} clusters",
                k
            )));
        };
        let children = d.children_of(r)?;
        roots.swap_remove(idx);
        count += children.len() - 1;
        roots.extend(children);
        if count > k {
            return Err(Error::InvalidArgument(format!(
                "non-binary vertex overshoots k={}",
                k
            )));
        }
    }
    let mut clusters = Vec::with_capacity(k);
    for &r in &roots {
        let mut samples = Vec::new();
        let mut stack = vec![r];
        while let Some(v) = stack.pop() {
            let children = d.children_of(v)?;
            if children.is_empty() {
                samples.push(d.sample_of(v)?.expect("sample leaves"));
            } else {
                stack.extend(children);
            }
        }
        samples.sort_unstable();
        clusters.push(samples);
    }
    clusters.sort_by_key(|c| c[0]);
    Ok(clusters)
}

/// Mean of the pairwise leaf affinities between two sample sets, straight
/// from the input matrix. This is what the stored cluster affinities must
/// equal at every step; tests lean on it.
pub fn mean_pairwise_affinity(aff: &AffinityMatrix, u: &[usize], v: &[usize]) -> f64 {
    let mut sum = 0.0;
    for &i in u {
        for &j in v {
            sum += aff.get(i, j);
        }
    }
    sum / (u.len() * v.len()) as f64
}
