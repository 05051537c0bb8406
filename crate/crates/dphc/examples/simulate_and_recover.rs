//! End-to-end walkthrough: draw high-dimensional observations from a known
//! latent tree, cluster them by largest average dot product, and check how
//! faithfully the tree was recovered.
//!
//! Run with `cargo run --release --example simulate_and_recover`.

use dphc::affinity::affinity_data;
use dphc::agglomerate::cluster_dot;
use dphc::dendrogram::merge_distortion;
use dphc::eval::{mean_tau_b, rankings_from_dendrogram};
use dphc::genmodel::{builtin_tree_e1, sample_additive, true_heights};

fn main() {
    // The built-in 8-vertex tree: five observable prototypes {1..5} hanging
    // off internal vertices 6, 7 and root 8. A vertex's height is its
    // accumulated variance, and the expected normalized dot product between
    // two prototypes is the height of their most recent common ancestor.
    let spec = builtin_tree_e1();
    let heights = true_heights(&spec).unwrap();
    println!("true vertex heights:");
    let mut ids: Vec<_> = heights.keys().copied().collect();
    ids.sort();
    for v in ids {
        println!("  vertex {}: {}", v, heights[&v]);
    }

    // 200 observations in 3000 dimensions, unit observation noise.
    let (n, p, seed) = (200, 3000, 42);
    let draw = sample_additive(&spec, n, p, seed).unwrap();
    println!("\nsampled n={} p={} (seed {})", n, p, seed);

    // Pairwise affinities: (1/p) <Y_i, Y_j>. The clustering input.
    let affinity = affinity_data(&draw.y);

    // Merge the pair with the largest average affinity, n-1 times.
    let (estimate, trace) = cluster_dot(&affinity).unwrap();
    assert_eq!(estimate.validate(), Ok(()));
    println!(
        "clustered: {} merges, first at affinity {:.3}, last at {:.3}",
        trace.steps.len(),
        trace.steps.first().unwrap().value,
        trace.steps.last().unwrap().value,
    );

    // Merge distortion: worst-case difference between true and estimated
    // merge heights over all sample pairs. Also the ranking agreement per
    // sample (Kendall tau-b against the true merge order).
    let distortion = merge_distortion(&draw.truth, &draw.z, &estimate).unwrap();
    println!("merge distortion vs truth: {:.4}", distortion);

    let leaf_heights: Vec<f64> = draw
        .z
        .0
        .iter()
        .map(|&v| draw.truth.height_of(v).unwrap())
        .collect();
    let augmented = draw.truth.augment(&draw.z, &leaf_heights).unwrap();
    let truth_rankings = rankings_from_dendrogram(&augmented).unwrap();
    let tau = mean_tau_b(&truth_rankings, &estimate).unwrap();
    println!(
        "mean Kendall tau-b: {:.4} +- {:.4} ({} samples)",
        tau.mean, tau.stderr, tau.used
    );
}
