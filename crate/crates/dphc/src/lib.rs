/*!
Hierarchical structure recovery by dot-product agglomerative clustering.

Many data sets are generated by latent hierarchies: a tree of unobserved
prototypes where each observation is a noisy copy of one of them, and
prototypes inherit from their ancestors. Under such a model the normalized
dot product between two observations concentrates on the height of their
latent most recent common ancestor, so an agglomerative procedure that
always merges the pair of clusters with the *largest average dot product*
recovers the hierarchy: merge heights of the output tree track the heights
of the true one, with distortion controlled by the affinity estimation
error.

This crate provides that pipeline end to end:

* [`dendrogram`] — rooted trees with heights: validation, most recent
  common ancestors, merge heights, tree distances, merge distortion,
  augmentation with per-sample leaves, isomorphism, JSON and Newick export.
* [`affinity`] — affinity and distance tables: normalized dot products on
  raw data or PC scores, cosine affinity, Euclidean/Manhattan distances,
  estimation-error norms. Bit-exact symmetry, blocked summation.
* [`spectral`] — uncentered PCA scores and Wasserstein data-splitting rank
  selection.
* [`transport`] — exact 1-Wasserstein distances between point sets (with an
  exhaustive reference solver for cross-checking).
* [`agglomerate`] — the merge engines: dot-product clustering plus
  average/complete/single/Ward comparators, each with an O(n^2)
  nearest-neighbor-chain engine and a naive reference engine.
* [`genmodel`] — a simulator for the generative model with analytic ground
  truth (additive noise and multiplicative-factor variants).
* [`eval`] — Kendall tau-b ranking agreement against labelled or simulated
  truth, and the estimator-convergence experiment.
* [`io`] / [`cli`] — stable file formats and the `dphc` command-line
  front end.

Start with the `examples/` directory: each example is a runnable tour of
one capability.
*/

// Index-paired loops over row-major buffers are the house style here.
#![allow(clippy::needless_range_loop)]

pub mod affinity;
pub mod agglomerate;
pub mod cli;
pub mod dendrogram;
pub mod error;
pub mod eval;
pub mod genmodel;
pub mod io;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
