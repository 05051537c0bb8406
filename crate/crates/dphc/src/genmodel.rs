//! Latent-tree generative simulator.
//!
//! Observations follow `Y_i = X(Z_i) + sigma * E_i`: a latent assignment
//! `Z_i` drawn over a support set of tree vertices, a Gaussian diffusion `X`
//! down the tree (each edge adds an independent zero-mean increment with the
//! edge's variance, independently per dimension), and white observation
//! noise. Under this model the expected normalized dot product between two
//! vertices equals the height of their most recent common ancestor, where a
//! vertex's height is its accumulated variance; both the analytic heights
//! and the resulting per-pair affinities are returned with every draw.
//!
//! A multiplicative variant scales whole observations by random positive
//! factors instead of adding noise; it requires a tree whose leaves all sit
//! at height 1 (see [`normalize_leaves`]).
//!
//! Randomness comes from a counter-based generator (ChaCha12) with one
//! stream per (purpose, entity, dimension-block): purpose 1 draws the
//! assignments, purpose 2 a vertex's diffusion increments, purpose 3 a
//! sample's observation noise, purpose 4 a sample's multiplicative factor.
//! Entities are vertex ranks (position in sorted id order) or sample
//! indices; blocks cover 8192 dimensions. Outputs are therefore
//! reproducible bit-for-bit regardless of evaluation order or parallelism.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::affinity::{AffinityMatrix, DataMatrix, Mode};
use crate::dendrogram::{Dendrogram, LeafAssignment, Node};
use crate::error::{Error, Result};

/// Law of the positive per-sample factor in the multiplicative model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaLaw {
    Constant(f64),
    LogNormal { mu: f64, sigma: f64 },
}

impl Default for GammaLaw {
    fn default() -> GammaLaw {
        GammaLaw::LogNormal {
            mu: 0.0,
            sigma: 0.25,
        }
    }
}

/// One directed edge of the latent tree with its increment variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeEdge {
    pub parent: usize,
    pub child: usize,
    pub variance: f64,
}

/// Complete description of a generative model: tree topology, per-edge
/// variances, root variance, the support set the assignments are drawn
/// from, assignment weights, and the observation noise level.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeSpec {
    pub root_variance: f64,
    pub edges: Vec<TreeEdge>,
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    pub sigma: f64,
    pub gamma: GammaLaw,
}

#[derive(Serialize, Deserialize)]
struct TreeSpecFile {
    root_variance: f64,
    edges: Vec<(usize, usize, f64)>,
    support: Vec<usize>,
    weights: Vec<f64>,
    sigma: f64,
}

/// One simulated draw: observations, assignments, and the analytic ground
/// truth (per-pair affinities equal to merge heights in the true
/// dendrogram, exactly).
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub y: DataMatrix,
    pub z: LeafAssignment,
    pub true_alpha: AffinityMatrix,
    pub truth: Dendrogram,
    pub seed: u64,
}

impl TreeSpec {
    /// All vertex ids, sorted: everything mentioned by an edge or the
    /// support set.
    pub fn vertices(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .edges
            .iter()
            .flat_map(|e| [e.parent, e.child])
            .chain(self.support.iter().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// The unique parentless vertex.
    pub fn root(&self) -> Result<usize> {
        let ids = self.vertices();
        let children: std::collections::HashSet<usize> =
            self.edges.iter().map(|e| e.child).collect();
        let mut roots = ids.iter().copied().filter(|v| !children.contains(v));
        let root = roots
            .next()
            .ok_or_else(|| Error::InvalidTreeSpec("no root vertex".to_string()))?;
        if let Some(other) = roots.next() {
            return Err(Error::InvalidTreeSpec(format!(
                "multiple roots: {} and {}",
                root, other
            )));
        }
        Ok(root)
    }

    /// Childless vertices, sorted.
    pub fn leaves(&self) -> Vec<usize> {
        let parents: std::collections::HashSet<usize> =
            self.edges.iter().map(|e| e.parent).collect();
        self.vertices()
            .into_iter()
            .filter(|v| !parents.contains(v))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.root_variance.is_finite() || self.root_variance < 0.0 {
            return Err(Error::InvalidTreeSpec(
                "root variance must be finite and >= 0".into(),
            ));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::InvalidTreeSpec(
                "sigma must be finite and >= 0".into(),
            ));
        }
        let mut seen_child = std::collections::HashSet::new();
        for e in &self.edges {
            if !e.variance.is_finite() || e.variance < 0.0 {
                return Err(Error::InvalidTreeSpec(format!(
                    "edge {} -> {} has invalid variance",
                    e.parent, e.child
                )));
            }
            if !seen_child.insert(e.child) {
                return Err(Error::InvalidTreeSpec(format!(
                    "vertex {} has two parents",
                    e.child
                )));
            }
        }
        let root = self.root()?;
        // Connectivity: walk down from the root.
        let mut children: HashMap<usize, Vec<usize>> = HashMap::new();
        for e in &self.edges {
            children.entry(e.parent).or_default().push(e.child);
        }
        let mut reached = std::collections::HashSet::from([root]);
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &c in children.get(&v).into_iter().flatten() {
                if reached.insert(c) {
                    stack.push(c);
                }
            }
        }
        if reached.len() != self.vertices().len() {
            return Err(Error::InvalidTreeSpec(
                "graph is not a connected tree".into(),
            ));
        }
        if self.support.is_empty() {
            return Err(Error::InvalidTreeSpec("support set is empty".into()));
        }
        for &v in &self.support {
            if !reached.contains(&v) {
                return Err(Error::InvalidTreeSpec(format!(
                    "support vertex {} not in tree",
                    v
                )));
            }
        }
        if self.weights.len() != self.support.len() {
            return Err(Error::InvalidTreeSpec(format!(
                "{} weights for {} support vertices",
                self.weights.len(),
                self.support.len()
            )));
        }
        if self.weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidTreeSpec(
                "weights must be finite and >= 0".into(),
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidTreeSpec(format!(
                "weights sum to {}, not 1",
                total
            )));
        }
        if let GammaLaw::Constant(c) = self.gamma {
            if c <= 0.0 || !c.is_finite() {
                return Err(Error::InvalidTreeSpec(
                    "constant gamma must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = TreeSpecFile {
            root_variance: self.root_variance,
            edges: self
                .edges
                .iter()
                .map(|e| (e.parent, e.child, e.variance))
                .collect(),
            support: self.support.clone(),
            weights: self.weights.clone(),
            sigma: self.sigma,
        };
        serde_json::to_string_pretty(&file).expect("tree spec serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<TreeSpec> {
        let file: TreeSpecFile = serde_json::from_str(text)?;
        let spec = TreeSpec {
            root_variance: file.root_variance,
            edges: file
                .edges
                .iter()
                .map(|&(parent, child, variance)| TreeEdge {
                    parent,
                    child,
                    variance,
                })
                .collect(),
            support: file.support,
            weights: file.weights,
            sigma: file.sigma,
            gamma: GammaLaw::default(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Analytic vertex heights: the root's height is its variance and each edge
/// adds its increment variance, since independent zero-mean increments make
/// second moments additive along root-to-vertex paths.
pub fn true_heights(spec: &TreeSpec) -> Result<HashMap<usize, f64>> {
    spec.validate()?;
    let root = spec.root()?;
    let mut children: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for e in &spec.edges {
        children
            .entry(e.parent)
            .or_default()
            .push((e.child, e.variance));
    }
    let mut heights = HashMap::from([(root, spec.root_variance)]);
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        let hv = heights[&v];
        for &(c, var) in children.get(&v).into_iter().flatten() {
            heights.insert(c, hv + var);
            stack.push(c);
        }
    }
    Ok(heights)
}

/// The true dendrogram: the model's tree with analytic heights.
pub fn true_dendrogram(spec: &TreeSpec) -> Result<Dendrogram> {
    let heights = true_heights(spec)?;
    let mut parent: HashMap<usize, usize> = HashMap::new();
    for e in &spec.edges {
        parent.insert(e.child, e.parent);
    }
    let nodes: Vec<Node> = spec
        .vertices()
        .into_iter()
        .map(|v| Node::new(v, parent.get(&v).copied(), heights[&v]))
        .collect();
    Dendrogram::from_nodes(&nodes)
}

/// The 8-vertex simulation tree: edges 6->1, 6->2, 6->3, 7->4, 7->5, 8->6,
/// 8->7 with variances 5, 2, 2, 0.5, 7, 2, 1, root variance 1, uniform
/// assignments over the leaves {1..5}, unit observation noise.
pub fn builtin_tree_e1() -> TreeSpec {
    TreeSpec {
        root_variance: 1.0,
        edges: vec![
            TreeEdge {
                parent: 6,
                child: 1,
                variance: 5.0,
            },
            TreeEdge {
                parent: 6,
                child: 2,
                variance: 2.0,
            },
            TreeEdge {
                parent: 6,
                child: 3,
                variance: 2.0,
            },
            TreeEdge {
                parent: 7,
                child: 4,
                variance: 0.5,
            },
            TreeEdge {
                parent: 7,
                child: 5,
                variance: 7.0,
            },
            TreeEdge {
                parent: 8,
                child: 6,
                variance: 2.0,
            },
            TreeEdge {
                parent: 8,
                child: 7,
                variance: 1.0,
            },
        ],
        support: vec![1, 2, 3, 4, 5],
        weights: vec![0.2; 5],
        sigma: 1.0,
        gamma: GammaLaw::default(),
    }
}

/// Rescales a spec so every leaf sits at height exactly 1 (as the
/// multiplicative model requires): divide all variances by the largest leaf
/// height, then absorb the remainder into each leaf's own edge. Support
/// becomes the leaf set with uniform weights.
pub fn normalize_leaves(spec: &TreeSpec) -> Result<TreeSpec> {
    let heights = true_heights(spec)?;
    let leaves = spec.leaves();
    let hmax = leaves.iter().map(|v| heights[v]).fold(f64::MIN, f64::max);
    if hmax <= 0.0 || hmax.is_nan() {
        return Err(Error::InvalidTreeSpec(
            "cannot normalize an all-zero tree".into(),
        ));
    }
    let scale = 1.0 / hmax;
    let mut scaled_heights: HashMap<usize, f64> =
        heights.iter().map(|(&v, &h)| (v, h * scale)).collect();
    let root = spec.root()?;
    let mut edges = Vec::with_capacity(spec.edges.len());
    for e in &spec.edges {
        let variance = if leaves.contains(&e.child) {
            1.0 - scaled_heights[&e.parent]
        } else {
            e.variance * scale
        };
        edges.push(TreeEdge {
            parent: e.parent,
            child: e.child,
            variance,
        });
    }
    for &leaf in &leaves {
        scaled_heights.insert(leaf, 1.0);
    }
    let root_variance = if leaves.contains(&root) {
        1.0
    } else {
        spec.root_variance * scale
    };
    let k = leaves.len();
    let normalized = TreeSpec {
        root_variance,
        edges,
        support: leaves,
        weights: vec![1.0 / k as f64; k],
        sigma: spec.sigma,
        gamma: spec.gamma,
    };
    normalized.validate()?;
    Ok(normalized)
}

const BLOCK: usize = 8192;

const KIND_ASSIGNMENT: u8 = 1;
const KIND_DIFFUSION: u8 = 2;
const KIND_NOISE: u8 = 3;
const KIND_GAMMA: u8 = 4;

fn splitmix64(x: &mut u64) -> u64 {
    *x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, kind: u8, index: usize, block: usize) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    debug_assert!(index < (1 << 32) && block < (1 << 24));
    rng.set_stream(((kind as u64) << 56) | ((index as u64) << 24) | block as u64);
    rng
}

/// Gaussian diffusion of all tree vertices: one length-`p` row per vertex,
/// keyed by vertex id. Stream-split by (vertex rank, dimension block).
fn diffuse_tree(spec: &TreeSpec, p: usize, seed: u64) -> Result<HashMap<usize, Vec<f64>>> {
    let vertices = spec.vertices();
    let rank: HashMap<usize, usize> = vertices.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let root = spec.root()?;
    let mut children: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for e in &spec.edges {
        children
            .entry(e.parent)
            .or_default()
            .push((e.child, e.variance));
    }
    for kids in children.values_mut() {
        kids.sort_unstable_by_key(|&(c, _)| c);
    }
    // Topological order, root first.
    let mut order = vec![(root, spec.root_variance)];
    let mut idx = 0;
    while idx < order.len() {
        let (v, _) = order[idx];
        idx += 1;
        for &(c, var) in children.get(&v).into_iter().flatten() {
            order.push((c, var));
        }
    }
    let mut parent: HashMap<usize, usize> = HashMap::new();
    for e in &spec.edges {
        parent.insert(e.child, e.parent);
    }

    let mut x: HashMap<usize, Vec<f64>> = vertices.iter().map(|&v| (v, vec![0.0f64; p])).collect();
    let nblocks = p.div_ceil(BLOCK);
    for b in 0..nblocks {
        let lo = b * BLOCK;
        let hi = (lo + BLOCK).min(p);
        for &(v, var) in &order {
            let sd = var.sqrt();
            let mut rng = stream_rng(seed, KIND_DIFFUSION, rank[&v], b);
            if let Some(&pv) = parent.get(&v) {
                let base: Vec<f64> = x[&pv][lo..hi].to_vec();
                let row = x.get_mut(&v).unwrap();
                for (j, &basej) in (lo..hi).zip(&base) {
                    let g: f64 = rng.sample(StandardNormal);
                    row[j] = basej + sd * g;
                }
            } else {
                let row = x.get_mut(&v).unwrap();
                for j in lo..hi {
                    let g: f64 = rng.sample(StandardNormal);
                    row[j] = sd * g;
                }
            }
        }
    }
    Ok(x)
}

/// Analytic affinities for the realized assignments: entry (i, j) is the
/// merge height of `z_i` and `z_j` in the true dendrogram, diagonal the
/// assigned vertex's height.
pub fn alpha_from_truth(truth: &Dendrogram, z: &LeafAssignment) -> Result<AffinityMatrix> {
    z.check_against(truth)?;
    let mut verts: Vec<usize> = z.0.clone();
    verts.sort_unstable();
    verts.dedup();
    let k = verts.len();
    let vindex: HashMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut pair = vec![0.0f64; k * k];
    for a in 0..k {
        for b in a..k {
            let m = truth.merge_height(verts[a], verts[b])?;
            pair[a * k + b] = m;
            pair[b * k + a] = m;
        }
    }
    let n = z.len();
    let mut values = vec![0.0f64; n * n];
    for i in 0..n {
        let zi = vindex[&z.0[i]];
        for j in 0..n {
            values[i * n + j] = pair[zi * k + vindex[&z.0[j]]];
        }
    }
    AffinityMatrix::from_values(n, Mode::Affinity, values)
}

/// Draws `n` observations of dimension `p` from the additive model.
pub fn sample_additive(spec: &TreeSpec, n: usize, p: usize, seed: u64) -> Result<SampleSet> {
    spec.validate()?;
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
    // Assignments by cumulative inversion of the support weights.
    let mut zrng = stream_rng(seed, KIND_ASSIGNMENT, 0, 0);
    let mut z = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = zrng.random();
        let mut acc = 0.0;
        let mut chosen = *spec.support.last().expect("support non-empty");
        for (&v, &w) in spec.support.iter().zip(&spec.weights) {
            acc += w;
            if u < acc {
                chosen = v;
                break;
            }
        }
        z.push(chosen);
    }

    let x = diffuse_tree(spec, p, seed)?;
    let mut values = vec![0.0f64; n * p];
    let nblocks = p.div_ceil(BLOCK);
    for (i, &zi) in z.iter().enumerate() {
        let row = &mut values[i * p..(i + 1) * p];
        row.copy_from_slice(&x[&zi]);
        if spec.sigma > 0.0 {
            for b in 0..nblocks {
                let lo = b * BLOCK;
                let hi = (lo + BLOCK).min(p);
                let mut rng = stream_rng(seed, KIND_NOISE, i, b);
                for rv in row[lo..hi].iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *rv += spec.sigma * g;
                }
            }
        }
    }

    let truth = true_dendrogram(spec)?;
    let z = LeafAssignment(z);
    let true_alpha = alpha_from_truth(&truth, &z)?;
    Ok(SampleSet {
        y: DataMatrix::new(n, p, values)?,
        z,
        true_alpha,
        truth,
        seed,
    })
}

/// Draws one observation per leaf from the multiplicative model
/// `Y_i = gamma_i * X(leaf_i)`. Requires the support to be exactly the leaf
/// set and every leaf height to equal 1 (tolerance 1e-9); see
/// [`normalize_leaves`].
pub fn sample_multiplicative(spec: &TreeSpec, p: usize, seed: u64) -> Result<SampleSet> {
    spec.validate()?;
    if p < 1 {
        return Err(Error::TooSmall {
            what: "dimensions",
            min: 1,
            got: p,
        });
    }
    let leaves = spec.leaves();
    let mut sorted_support = spec.support.clone();
    sorted_support.sort_unstable();
    if sorted_support != leaves {
        return Err(Error::InvalidTreeSpec(
            "multiplicative model requires support = leaf set".into(),
        ));
    }
    let n = leaves.len();
    if n < 2 {
        return Err(Error::TooSmall {
            what: "leaves",
            min: 2,
            got: n,
        });
    }
    let heights = true_heights(spec)?;
    for &v in &leaves {
        if (heights[&v] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidTreeSpec(format!(
                "leaf {} has height {}, expected 1 (normalize first)",
                v, heights[&v]
            )));
        }
    }

    let x = diffuse_tree(spec, p, seed)?;
    let mut values = vec![0.0f64; n * p];
    for (i, &leaf) in leaves.iter().enumerate() {
        let gamma = match spec.gamma {
            GammaLaw::Constant(c) => c,
            GammaLaw::LogNormal { mu, sigma } => {
                let mut rng = stream_rng(seed, KIND_GAMMA, i, 0);
                let g: f64 = rng.sample(StandardNormal);
                (mu + sigma * g).exp()
            }
        };
        let row = &mut values[i * p..(i + 1) * p];
        for (rv, &xv) in row.iter_mut().zip(&x[&leaf]) {
            *rv = gamma * xv;
        }
    }

    let truth = true_dendrogram(spec)?;
    let z = LeafAssignment(leaves);
    let true_alpha = alpha_from_truth(&truth, &z)?;
    Ok(SampleSet {
        y: DataMatrix::new(n, p, values)?,
        z,
        true_alpha,
        truth,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affinity::affinity_cosine;

    #[test]
    fn e1_heights_by_accumulation() {
        // Oracle: accumulate root variance plus edge variances by hand.
        let spec = builtin_tree_e1();
        let h = true_heights(&spec).unwrap();
        assert_eq!(h[&8], 1.0);
        assert_eq!(h[&6], 1.0 + 2.0);
        assert_eq!(h[&7], 1.0 + 1.0);
        assert_eq!(h[&1], 1.0 + 2.0 + 5.0);
        assert_eq!(h[&2], 1.0 + 2.0 + 2.0);
        assert_eq!(h[&3], 1.0 + 2.0 + 2.0);
        assert_eq!(h[&4], 1.0 + 1.0 + 0.5);
        assert_eq!(h[&5], 1.0 + 1.0 + 7.0);
    }

    #[test]
    fn single_vertex_tree() {
        let spec = TreeSpec {
            root_variance: 2.5,
            edges: vec![],
            support: vec![0],
            weights: vec![1.0],
            sigma: 0.0,
            gamma: GammaLaw::default(),
        };
        let h = true_heights(&spec).unwrap();
        assert_eq!(h[&0], 2.5);
    }

    #[test]
    fn e1_properties() {
        let spec = builtin_tree_e1();
        assert_eq!(spec.support.len(), 5);
        assert!(spec.weights.iter().all(|&w| w == 0.2));
        assert_eq!(spec.sigma, 1.0);
        let truth = true_dendrogram(&spec).unwrap();
        assert_eq!(truth.validate(), Ok(()));
        assert_eq!(truth.min_branch_length().unwrap(), 0.5); // edge 7 -> 4
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = builtin_tree_e1();
        let text = spec.to_json();
        let back = TreeSpec::from_json(&text).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn noiseless_affinities_concentrate_at_large_p() {
        // With sigma=0 the empirical normalized dot products converge to
        // the analytic affinities: at p=100000 and n=20 the worst error
        // stays under 0.2 in at least 95 of 100 seeds.
        use crate::affinity::{affinity_data, max_affinity_error};
        use rayon::prelude::*;
        let mut spec = builtin_tree_e1();
        spec.sigma = 0.0;
        let below: usize = (0..100u64)
            .into_par_iter()
            .map(|seed| {
                let draw = sample_additive(&spec, 20, 100_000, seed).unwrap();
                let est = affinity_data(&draw.y);
                let err = max_affinity_error(&est, &draw.true_alpha).unwrap();
                usize::from(err < 0.2)
            })
            .sum();
        assert!(below >= 95, "error below 0.2 in only {}/100 seeds", below);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = builtin_tree_e1();
        let a = sample_additive(&spec, 12, 300, 42).unwrap();
        let b = sample_additive(&spec, 12, 300, 42).unwrap();
        assert_eq!(a.z, b.z);
        assert_eq!(a.y.values(), b.y.values());
        let c = sample_additive(&spec, 12, 300, 43).unwrap();
        assert_ne!(a.y.values(), c.y.values());
    }

    #[test]
    fn zero_variance_spec_yields_zero_data() {
        let spec = TreeSpec {
            root_variance: 0.0,
            edges: vec![TreeEdge {
                parent: 0,
                child: 1,
                variance: 0.0,
            }],
            support: vec![1],
            weights: vec![1.0],
            sigma: 0.0,
            gamma: GammaLaw::default(),
        };
        let s = sample_additive(&spec, 5, 64, 7).unwrap();
        assert!(s.y.values().iter().all(|&v| v == 0.0));
        assert!(s.true_alpha.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn true_alpha_is_merge_height_exactly() {
        let spec = builtin_tree_e1();
        let s = sample_additive(&spec, 30, 10, 3).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                let m = s.truth.merge_height(s.z.0[i], s.z.0[j]).unwrap();
                assert_eq!(s.true_alpha.get(i, j), m);
            }
        }
        // And affinities are non-negative under the model.
        assert!(s.true_alpha.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn martingale_and_independence_checks() {
        // Increments along every edge are mean zero; sibling increments are
        // uncorrelated. Monte Carlo at 5 standard errors.
        let spec = builtin_tree_e1();
        let p = 40_000;
        let x = diffuse_tree(&spec, p, 11).unwrap();
        for e in &spec.edges {
            let parent = &x[&e.parent];
            let child = &x[&e.child];
            let mean: f64 = parent.iter().zip(child).map(|(a, b)| b - a).sum::<f64>() / p as f64;
            let se = (e.variance / p as f64).sqrt();
            assert!(
                mean.abs() <= 5.0 * se,
                "edge {}->{}: mean {} vs se {}",
                e.parent,
                e.child,
                mean,
                se
            );
        }
        // Siblings 1 and 2 under 6.
        let inc1: Vec<f64> = x[&1].iter().zip(&x[&6]).map(|(a, b)| a - b).collect();
        let inc2: Vec<f64> = x[&2].iter().zip(&x[&6]).map(|(a, b)| a - b).collect();
        let dot: f64 = inc1.iter().zip(&inc2).map(|(a, b)| a * b).sum::<f64>() / p as f64;
        let se = (5.0f64 * 2.0 / p as f64).sqrt(); // Var(inc1*inc2) = v1*v2
        assert!(
            dot.abs() <= 5.0 * se,
            "sibling increment correlation {}",
            dot
        );
    }

    #[test]
    fn observation_norms_concentrate_on_height_plus_noise() {
        let spec = builtin_tree_e1();
        let p = 40_000;
        let s = sample_additive(&spec, 8, p, 19).unwrap();
        let h = true_heights(&spec).unwrap();
        for i in 0..8 {
            let msq: f64 = s.y.row(i).iter().map(|v| v * v).sum::<f64>() / p as f64;
            let want = h[&s.z.0[i]] + spec.sigma * spec.sigma;
            let se = (2.0 * want * want / p as f64).sqrt();
            assert!(
                (msq - want).abs() <= 5.0 * se,
                "sample {}: |Y|^2/p = {} vs {}",
                i,
                msq,
                want
            );
        }
    }

    #[test]
    fn normalize_leaves_makes_unit_leaf_heights() {
        let spec = normalize_leaves(&builtin_tree_e1()).unwrap();
        let h = true_heights(&spec).unwrap();
        for v in spec.leaves() {
            assert!((h[&v] - 1.0).abs() < 1e-12);
        }
        assert_eq!(spec.support, vec![1, 2, 3, 4, 5]);
        // Internal structure keeps its relative ordering.
        assert!(h[&8] < h[&7] && h[&7] < h[&6]);
    }

    #[test]
    fn multiplicative_unit_gamma_is_noiseless_diffusion() {
        let mut spec = normalize_leaves(&builtin_tree_e1()).unwrap();
        spec.gamma = GammaLaw::Constant(1.0);
        let s = sample_multiplicative(&spec, 128, 5).unwrap();
        let x = diffuse_tree(&spec, 128, 5).unwrap();
        for (i, &leaf) in spec.leaves().iter().enumerate() {
            assert_eq!(s.y.row(i), &x[&leaf][..]);
        }
    }

    #[test]
    fn multiplicative_requires_normalized_leaves() {
        let spec = builtin_tree_e1(); // leaf heights far from 1
        let err = sample_multiplicative(&spec, 16, 1).unwrap_err();
        assert!(matches!(err, Error::InvalidTreeSpec(_)));
    }

    #[test]
    fn cosine_ignores_gamma_law() {
        // Same seed, different gamma laws: identical diffusion, so the
        // cosine affinities agree up to rounding in the scaled products.
        let base = normalize_leaves(&builtin_tree_e1()).unwrap();
        let mut constant = base.clone();
        constant.gamma = GammaLaw::Constant(1.0);
        let mut lognormal = base.clone();
        lognormal.gamma = GammaLaw::LogNormal {
            mu: 0.3,
            sigma: 0.8,
        };
        let s1 = sample_multiplicative(&constant, 512, 21).unwrap();
        let s2 = sample_multiplicative(&lognormal, 512, 21).unwrap();
        let c1 = affinity_cosine(&s1.y).unwrap();
        let c2 = affinity_cosine(&s2.y).unwrap();
        for i in 0..c1.n() {
            for j in 0..c1.n() {
                assert!((c1.get(i, j) - c2.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cosine_gamma_invariance_is_bitwise_for_pow2_factors() {
        // Power-of-two factors rescale without rounding, so cancellation in
        // the cosine is exact at the bit level.
        let base = normalize_leaves(&builtin_tree_e1()).unwrap();
        let mut spec = base.clone();
        spec.gamma = GammaLaw::Constant(1.0);
        let s = sample_multiplicative(&spec, 256, 33).unwrap();
        let n = s.y.n();
        let p = s.y.p();
        let factors = [0.5, 4.0, 2.0, 0.25, 8.0];
        let mut scaled = s.y.values().to_vec();
        for i in 0..n {
            for k in 0..p {
                scaled[i * p + k] *= factors[i % factors.len()];
            }
        }
        let ys = DataMatrix::new(n, p, scaled).unwrap();
        let c1 = affinity_cosine(&s.y).unwrap();
        let c2 = affinity_cosine(&ys).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(c1.get(i, j).to_bits(), c2.get(i, j).to_bits());
            }
        }
    }
}
