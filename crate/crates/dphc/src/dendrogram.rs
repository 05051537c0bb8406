//! Rooted trees with per-vertex heights, and the geometric queries used
//! throughout the crate.
//!
//! A dendrogram here is a rooted tree together with a height function that
//! is non-decreasing from the root towards the leaves: leaves sit high, the
//! root sits low. This is the orientation produced by affinity-based
//! clustering, where the root records the weakest (smallest) merge affinity.
//! Distance-based comparators produce the reversed orientation; such trees
//! are still representable but fail [`Dendrogram::validate`].
//!
//! Heights are exact `f64` values and the height-order check uses exact `>=`
//! with no tolerance: the clustering engine constructs heights that satisfy
//! the ordering exactly, so any violation is a real defect.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One vertex of a dendrogram, as used for construction and (de)serialization.
///
/// `leaf_sample` links a leaf vertex to the observation index it represents;
/// internal vertices and unlabelled leaves carry `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub parent: Option<usize>,
    pub height: f64,
    #[serde(default)]
    pub leaf_sample: Option<usize>,
}

impl Node {
    pub fn new(id: usize, parent: Option<usize>, height: f64) -> Node {
        Node {
            id,
            parent,
            height,
            leaf_sample: None,
        }
    }

    pub fn leaf(id: usize, parent: Option<usize>, height: f64, sample: usize) -> Node {
        Node {
            id,
            parent,
            height,
            leaf_sample: Some(sample),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DendrogramFile {
    nodes: Vec<Node>,
}

/// A structural defect found by [`Dendrogram::validate`].
///
/// Violations are ordinary return values, not errors: an invalid dendrogram
/// is something the caller may want to inspect and report.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// No vertex is parentless.
    NoRoot,
    /// More than one vertex is parentless; the two ids are reported.
    MultipleRoots(usize, usize),
    /// The vertex is not reachable from the root (parent pointers cycle).
    Unreachable(usize),
    /// `height(v) < height(parent(v))` at this vertex.
    HeightOrder(usize),
    /// A vertex with children carries a sample label.
    SampleOnInternal(usize),
    /// Two leaves claim the same sample index.
    DuplicateSample { sample: usize, vertex: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoRoot => write!(f, "no root: every vertex has a parent"),
            Violation::MultipleRoots(a, b) => {
                write!(
                    f,
                    "multiple roots: vertices {} and {} are both parentless",
                    a, b
                )
            }
            Violation::Unreachable(v) => {
                write!(f, "vertex {} unreachable from the root", v)
            }
            Violation::HeightOrder(v) => {
                write!(f, "height order: vertex {} lies below its parent", v)
            }
            Violation::SampleOnInternal(v) => {
                write!(f, "sample label on internal vertex {}", v)
            }
            Violation::DuplicateSample { sample, vertex } => {
                write!(f, "duplicate sample {} at vertex {}", sample, vertex)
            }
        }
    }
}

/// A map from sample index to the dendrogram vertex the sample was drawn
/// from (the realized latent assignment).
#[derive(Clone, Debug, PartialEq)]
pub struct LeafAssignment(pub Vec<usize>);

impl LeafAssignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vertex(&self, sample: usize) -> Result<usize> {
        self.0
            .get(sample)
            .copied()
            .ok_or(Error::UnassignedSample(sample))
    }

    /// Checks that every assigned vertex exists in `d`.
    pub fn check_against(&self, d: &Dendrogram) -> Result<()> {
        for &v in &self.0 {
            if !d.contains(v) {
                return Err(Error::UnknownVertex(v));
            }
        }
        Ok(())
    }
}

/// A rooted tree with heights. Immutable after construction; queries may be
/// issued from many threads concurrently.
#[derive(Clone, Debug)]
pub struct Dendrogram {
    ids: Vec<usize>,
    index: HashMap<usize, usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    height: Vec<f64>,
    leaf_sample: Vec<Option<usize>>,
    depth: Vec<usize>,
    reachable: Vec<bool>,
    roots: Vec<usize>,
    leaves: Vec<usize>,
}

impl Dendrogram {
    /// Builds a dendrogram from a vertex list.
    ///
    /// Only hard indexing defects are errors here (duplicate ids, parents
    /// that do not exist). Structural problems such as multiple roots or
    /// height disorder are deliberately representable so that
    /// [`validate`](Self::validate) can report them.
    pub fn from_nodes(nodes: &[Node]) -> Result<Dendrogram> {
        let n = nodes.len();
        let mut index = HashMap::with_capacity(n);
        for (slot, node) in nodes.iter().enumerate() {
            if index.insert(node.id, slot).is_some() {
                return Err(Error::DuplicateVertex(node.id));
            }
        }
        let mut parent = vec![None; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (slot, node) in nodes.iter().enumerate() {
            if let Some(pid) = node.parent {
                let pslot = *index.get(&pid).ok_or(Error::UnknownVertex(pid))?;
                parent[slot] = Some(pslot);
                children[pslot].push(slot);
            }
        }
        let ids: Vec<usize> = nodes.iter().map(|nd| nd.id).collect();
        let height: Vec<f64> = nodes.iter().map(|nd| nd.height).collect();
        let leaf_sample: Vec<Option<usize>> = nodes.iter().map(|nd| nd.leaf_sample).collect();
        let roots: Vec<usize> = (0..n).filter(|&s| parent[s].is_none()).collect();

        // Depths and reachability by sweep from the roots; vertices caught
        // in parent-pointer cycles are never visited.
        let mut depth = vec![0usize; n];
        let mut reachable = vec![false; n];
        let mut queue: Vec<usize> = roots.clone();
        for &r in &roots {
            reachable[r] = true;
        }
        while let Some(v) = queue.pop() {
            for &c in &children[v] {
                depth[c] = depth[v] + 1;
                reachable[c] = true;
                queue.push(c);
            }
        }

        let mut leaves: Vec<usize> = (0..n)
            .filter(|&s| reachable[s] && children[s].is_empty())
            .collect();
        let all_sampled = !leaves.is_empty() && leaves.iter().all(|&s| leaf_sample[s].is_some());
        if all_sampled {
            leaves.sort_by_key(|&s| leaf_sample[s].unwrap());
        } else {
            leaves.sort_by_key(|&s| ids[s]);
        }

        Ok(Dendrogram {
            ids,
            index,
            parent,
            children,
            height,
            leaf_sample,
            depth,
            reachable,
            roots,
            leaves,
        })
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.index.contains_key(&id)
    }

    /// Vertex ids in construction order.
    pub fn vertex_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.ids.iter().copied()
    }

    /// Ids of the leaves (childless vertices), in canonical order: by sample
    /// index when every leaf carries one, otherwise by id.
    pub fn leaf_ids(&self) -> Vec<usize> {
        self.leaves.iter().map(|&s| self.ids[s]).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn height_of(&self, id: usize) -> Result<f64> {
        Ok(self.height[self.slot(id)?])
    }

    pub fn parent_of(&self, id: usize) -> Result<Option<usize>> {
        Ok(self.parent[self.slot(id)?].map(|s| self.ids[s]))
    }

    pub fn children_of(&self, id: usize) -> Result<Vec<usize>> {
        Ok(self.children[self.slot(id)?]
            .iter()
            .map(|&s| self.ids[s])
            .collect())
    }

    pub fn sample_of(&self, id: usize) -> Result<Option<usize>> {
        Ok(self.leaf_sample[self.slot(id)?])
    }

    /// The root id, if the tree has exactly one root.
    pub fn root_id(&self) -> Result<usize> {
        Ok(self.ids[self.root_slot()?])
    }

    /// When the leaves are exactly the samples `0..n`, returns `n`.
    pub fn sample_leaf_count(&self) -> Option<usize> {
        let n = self.leaves.len();
        let mut seen = vec![false; n];
        for &s in &self.leaves {
            let sample = self.leaf_sample[s]?;
            if sample >= n || seen[sample] {
                return None;
            }
            seen[sample] = true;
        }
        Some(n)
    }

    fn slot(&self, id: usize) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownVertex(id))
    }

    fn root_slot(&self) -> Result<usize> {
        if self.roots.len() != 1 {
            return Err(Error::InvalidStructure(format!(
                "{} roots present",
                self.roots.len()
            )));
        }
        let root = self.roots[0];
        if self.reachable.iter().any(|&r| !r) {
            return Err(Error::InvalidStructure("parent pointers cycle".to_string()));
        }
        Ok(root)
    }

    /// Checks every type invariant and reports the first violation found.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        if self.roots.is_empty() {
            return Err(Violation::NoRoot);
        }
        if self.roots.len() > 1 {
            return Err(Violation::MultipleRoots(
                self.ids[self.roots[0]],
                self.ids[self.roots[1]],
            ));
        }
        for slot in 0..self.len() {
            if !self.reachable[slot] {
                return Err(Violation::Unreachable(self.ids[slot]));
            }
        }
        for slot in 0..self.len() {
            if let Some(p) = self.parent[slot] {
                let (h, hp) = (self.height[slot], self.height[p]);
                if h < hp || h.is_nan() || hp.is_nan() {
                    return Err(Violation::HeightOrder(self.ids[slot]));
                }
            }
        }
        let mut by_sample: HashMap<usize, usize> = HashMap::new();
        for slot in 0..self.len() {
            if let Some(sample) = self.leaf_sample[slot] {
                if !self.children[slot].is_empty() {
                    return Err(Violation::SampleOnInternal(self.ids[slot]));
                }
                if by_sample.insert(sample, slot).is_some() {
                    return Err(Violation::DuplicateSample {
                        sample,
                        vertex: self.ids[slot],
                    });
                }
            }
        }
        Ok(())
    }

    /// Most recent common ancestor of `u` and `v` (ancestor-or-self).
    ///
    /// Parent-pointer walk with precomputed depths, O(depth).
    pub fn mrca(&self, u: usize, v: usize) -> Result<usize> {
        self.root_slot()?;
        let mut a = self.slot(u)?;
        let mut b = self.slot(v)?;
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("non-root has parent");
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("non-root has parent");
        }
        while a != b {
            a = self.parent[a].expect("walk meets at root");
            b = self.parent[b].expect("walk meets at root");
        }
        Ok(self.ids[a])
    }

    /// Height of the most recent common ancestor. Symmetric, and
    /// `merge_height(v, v) == height(v)`.
    pub fn merge_height(&self, u: usize, v: usize) -> Result<f64> {
        let w = self.mrca(u, v)?;
        self.height_of(w)
    }

    /// Vertical path length `h(u) + h(v) - 2 h(mrca(u, v))`.
    pub fn tree_distance(&self, u: usize, v: usize) -> Result<f64> {
        let m = self.merge_height(u, v)?;
        Ok(self.height_of(u)? + self.height_of(v)? - 2.0 * m)
    }

    /// Minimum height gap `h(v) - h(parent(v))` over non-root vertices,
    /// excluding edges to sample-labelled leaves (which may legitimately
    /// have zero length after [`augment`](Self::augment)). Use
    /// [`min_branch_length_all`](Self::min_branch_length_all) to include
    /// them.
    pub fn min_branch_length(&self) -> Result<f64> {
        self.min_branch(false)
    }

    /// Like [`min_branch_length`](Self::min_branch_length) but over every
    /// edge, sample-leaf edges included.
    pub fn min_branch_length_all(&self) -> Result<f64> {
        self.min_branch(true)
    }

    fn min_branch(&self, include_sample_leaves: bool) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::TooSmall {
                what: "vertices",
                min: 2,
                got: self.len(),
            });
        }
        self.root_slot()?;
        let mut best: Option<f64> = None;
        for slot in 0..self.len() {
            if let Some(p) = self.parent[slot] {
                if !include_sample_leaves && self.leaf_sample[slot].is_some() {
                    continue;
                }
                let gap = self.height[slot] - self.height[p];
                best = Some(match best {
                    Some(b) => b.min(gap),
                    None => gap,
                });
            }
        }
        best.ok_or_else(|| {
            Error::InvalidArgument("no edges left after excluding sample leaves".to_string())
        })
    }

    /// Attaches one leaf per sample under its assigned vertex, prunes
    /// vertices left without any sample below them, and contracts chains of
    /// vertices that the pruning made unary (keeping the shallowest vertex
    /// of each chain, which preserves merge heights between the remaining
    /// leaves).
    ///
    /// `leaf_heights[i]` must be at least the height of `z[i]`; equality is
    /// allowed.
    pub fn augment(&self, z: &LeafAssignment, leaf_heights: &[f64]) -> Result<Dendrogram> {
        self.root_slot()?;
        if z.len() != leaf_heights.len() {
            return Err(Error::ShapeMismatch {
                expected: z.len(),
                got: leaf_heights.len(),
            });
        }
        let n = z.len();
        let mut attached: Vec<usize> = vec![0; self.len()];
        for i in 0..n {
            let slot = self.slot(z.vertex(i)?)?;
            let (h, hp) = (leaf_heights[i], self.height[slot]);
            if h < hp || h.is_nan() || hp.is_nan() {
                return Err(Error::HeightOrder {
                    vertex: self.ids[slot],
                    height: leaf_heights[i],
                    parent_height: self.height[slot],
                });
            }
            attached[slot] += 1;
        }

        // Keep exactly the vertices with at least one sample somewhere below.
        let mut keep = vec![false; self.len()];
        for i in 0..n {
            let mut cur = Some(self.slot(z.vertex(i)?)?);
            while let Some(s) = cur {
                if keep[s] {
                    break;
                }
                keep[s] = true;
                cur = self.parent[s];
            }
        }

        // A vertex contracts away when pruning made it unary (it lost
        // children, has exactly one kept child, no samples of its own) and
        // its kept parent is in the same condition; that keeps the
        // shallowest vertex of every newly-unary chain.
        let newly_unary = |s: usize| -> bool {
            if !keep[s] || attached[s] > 0 {
                return false;
            }
            let total = self.children[s].len();
            let kept = self.children[s].iter().filter(|&&c| keep[c]).count();
            kept == 1 && kept < total
        };
        let mut removed = vec![false; self.len()];
        for s in 0..self.len() {
            if newly_unary(s) {
                if let Some(p) = self.parent[s] {
                    if newly_unary(p) {
                        removed[s] = true;
                    }
                }
            }
        }

        let surviving_parent = |mut s: usize| -> Option<usize> {
            loop {
                let p = self.parent[s]?;
                if keep[p] && !removed[p] {
                    return Some(p);
                }
                s = p;
            }
        };

        let base = self.ids.iter().copied().max().unwrap_or(0) + 1;
        let mut nodes = Vec::new();
        for s in 0..self.len() {
            if keep[s] && !removed[s] {
                nodes.push(Node::new(
                    self.ids[s],
                    surviving_parent(s).map(|p| self.ids[p]),
                    self.height[s],
                ));
            }
        }
        for i in 0..n {
            let slot = self.slot(z.vertex(i)?)?;
            nodes.push(Node::leaf(
                base + i,
                Some(self.ids[slot]),
                leaf_heights[i],
                i,
            ));
        }
        Dendrogram::from_nodes(&nodes)
    }

    /// Returns a copy whose leaves carry sample labels according to `z`,
    /// which must map samples one-to-one onto the leaves.
    pub fn with_samples(&self, z: &LeafAssignment) -> Result<Dendrogram> {
        self.root_slot()?;
        if z.len() != self.leaves.len() {
            return Err(Error::LeafSetMismatch(format!(
                "{} samples for {} leaves",
                z.len(),
                self.leaves.len()
            )));
        }
        let mut sample_for: HashMap<usize, usize> = HashMap::new();
        for i in 0..z.len() {
            let v = z.vertex(i)?;
            let slot = self.slot(v)?;
            if !self.children[slot].is_empty() {
                return Err(Error::LeafSetMismatch(format!(
                    "vertex {} is not a leaf",
                    v
                )));
            }
            if sample_for.insert(slot, i).is_some() {
                return Err(Error::LeafSetMismatch(format!(
                    "vertex {} assigned twice",
                    v
                )));
            }
        }
        let nodes: Vec<Node> = (0..self.len())
            .map(|s| Node {
                id: self.ids[s],
                parent: self.parent[s].map(|p| self.ids[p]),
                height: self.height[s],
                leaf_sample: sample_for.get(&s).copied(),
            })
            .collect();
        Dendrogram::from_nodes(&nodes)
    }

    /// Tests whether two dendrograms are the same tree up to relabelling of
    /// internal vertices. Leaf identity is fixed: a leaf is named by its
    /// sample label when present, by its vertex id otherwise. Heights play
    /// no role.
    pub fn isomorphic(&self, other: &Dendrogram) -> Result<bool> {
        let mut a = self.leaf_labels()?;
        let mut b = other.leaf_labels()?;
        a.sort();
        b.sort();
        if a != b {
            return Err(Error::LeafSetMismatch("leaf label sets differ".to_string()));
        }
        Ok(self.signature()? == other.signature()?)
    }

    fn leaf_labels(&self) -> Result<Vec<String>> {
        self.root_slot()?;
        Ok(self
            .leaves
            .iter()
            .map(|&s| match self.leaf_sample[s] {
                Some(i) => format!("s{}", i),
                None => format!("v{}", self.ids[s]),
            })
            .collect())
    }

    /// Canonical form: sorted recursive leaf-set signatures.
    fn signature(&self) -> Result<String> {
        let root = self.root_slot()?;
        fn sig(d: &Dendrogram, s: usize) -> String {
            if d.children[s].is_empty() {
                match d.leaf_sample[s] {
                    Some(i) => format!("s{}", i),
                    None => format!("v{}", d.ids[s]),
                }
            } else {
                let mut parts: Vec<String> = d.children[s].iter().map(|&c| sig(d, c)).collect();
                parts.sort();
                format!("({})", parts.join(","))
            }
        }
        Ok(sig(self, root))
    }

    /// Serializes to the `{"nodes": [...]}` JSON format, nodes in ascending
    /// id order.
    pub fn to_json(&self) -> String {
        let mut nodes: Vec<Node> = (0..self.len())
            .map(|s| Node {
                id: self.ids[s],
                parent: self.parent[s].map(|p| self.ids[p]),
                height: self.height[s],
                leaf_sample: self.leaf_sample[s],
            })
            .collect();
        nodes.sort_by_key(|nd| nd.id);
        serde_json::to_string_pretty(&DendrogramFile { nodes })
            .expect("dendrogram serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Dendrogram> {
        let file: DendrogramFile = serde_json::from_str(text)?;
        Dendrogram::from_nodes(&file.nodes)
    }

    /// Newick export with branch length `h(child) - h(parent)`. Leaves are
    /// named by sample (`s3`) or vertex id (`v7`).
    pub fn to_newick(&self) -> Result<String> {
        let root = self.root_slot()?;
        fn write(d: &Dendrogram, s: usize, out: &mut String) {
            if d.children[s].is_empty() {
                match d.leaf_sample[s] {
                    Some(i) => out.push_str(&format!("s{}", i)),
                    None => out.push_str(&format!("v{}", d.ids[s])),
                }
            } else {
                out.push('(');
                for (k, &c) in d.children[s].iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    write(d, c, out);
                    let len = d.height[c] - d.height[s];
                    out.push_str(&format!(":{}", len));
                }
                out.push(')');
            }
        }
        let mut out = String::new();
        write(self, root, &mut out);
        out.push(';');
        Ok(out)
    }
}

/// Memoized all-pairs merge heights for a dendrogram whose leaves are
/// exactly the samples `0..n`.
///
/// `get(i, j)` is the height of the most recent common ancestor of leaves
/// `i` and `j`; the diagonal holds leaf heights. Built in O(n^2) by a single
/// post-order sweep.
pub struct MergeHeights {
    n: usize,
    values: Vec<f64>,
}

impl MergeHeights {
    pub fn from_dendrogram(d: &Dendrogram) -> Result<MergeHeights> {
        let root = d.root_slot()?;
        let n = d.sample_leaf_count().ok_or_else(|| {
            Error::LeafSetMismatch("leaves are not exactly the samples 0..n".to_string())
        })?;
        let mut values = vec![0.0; n * n];
        // Post-order accumulation of the samples below each vertex; pairs
        // that first meet at `v` get merge height h(v).
        fn descend(d: &Dendrogram, s: usize, values: &mut [f64], n: usize) -> Vec<usize> {
            if d.children[s].is_empty() {
                let i = d.leaf_sample[s].expect("sample-complete leaves");
                values[i * n + i] = d.height[s];
                return vec![i];
            }
            let mut acc: Vec<usize> = Vec::new();
            for &c in &d.children[s] {
                let below = descend(d, c, values, n);
                for &i in &acc {
                    for &j in &below {
                        values[i * n + j] = d.height[s];
                        values[j * n + i] = d.height[s];
                    }
                }
                acc.extend(below);
            }
            acc
        }
        descend(d, root, &mut values, n);
        Ok(MergeHeights { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Merge distortion between a true dendrogram (through the realized
/// assignment `z`) and an estimated dendrogram whose leaves are the samples:
/// the largest absolute merge-height discrepancy over distinct sample pairs.
pub fn merge_distortion(truth: &Dendrogram, z: &LeafAssignment, est: &Dendrogram) -> Result<f64> {
    let n = est.sample_leaf_count().ok_or_else(|| {
        Error::LeafSetMismatch("estimate leaves are not the samples 0..n".to_string())
    })?;
    if z.len() != n {
        return Err(Error::LeafSetMismatch(format!(
            "assignment covers {} samples, estimate has {} leaves",
            z.len(),
            n
        )));
    }
    z.check_against(truth)?;
    let est_m = MergeHeights::from_dendrogram(est)?;

    // Merge heights in the truth only depend on the pair of assigned
    // vertices, so compute them once per distinct vertex pair.
    let mut verts: Vec<usize> = z.0.clone();
    verts.sort_unstable();
    verts.dedup();
    let vindex: HashMap<usize, usize> = verts.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let k = verts.len();
    let mut pair = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let m = truth.merge_height(verts[a], verts[b])?;
            pair[a * k + b] = m;
            pair[b * k + a] = m;
        }
    }

    let mut worst = 0.0f64;
    for i in 0..n {
        let zi = vindex[&z.0[i]];
        for j in (i + 1)..n {
            let zj = vindex[&z.0[j]];
            let diff = (pair[zi * k + zj] - est_m.get(i, j)).abs();
            if diff > worst {
                worst = diff;
            }
        }
    }
    Ok(worst)
}
