//! A close look at the merge engines: the merge trace, the equivalence of
//! the fast nearest-neighbor-chain engine with the naive greedy reference,
//! and flat cluster extraction.
//!
//! Run with `cargo run --release --example merge_engines`.

use dphc::affinity::{AffinityMatrix, Mode};
use dphc::agglomerate::{cluster_dot, cluster_dot_reference, flat_cut};

fn main() {
    // A hand-made affinity table over six samples: {0,1,2} strongly
    // affine, {3,4} affine, 5 loosely attached to the second group.
    let n = 6;
    #[rustfmt::skip]
    let values = vec![
        9.0, 6.0, 5.8, 1.0, 1.1, 0.9,
        6.0, 8.5, 5.9, 1.2, 0.8, 1.0,
        5.8, 5.9, 9.2, 0.9, 1.0, 1.1,
        1.0, 1.2, 0.9, 7.0, 4.0, 2.0,
        1.1, 0.8, 1.0, 4.0, 7.5, 2.2,
        0.9, 1.0, 1.1, 2.0, 2.2, 6.0,
    ];
    let aff = AffinityMatrix::from_values(n, Mode::Affinity, values).unwrap();

    let (dend, trace) = cluster_dot(&aff).unwrap();
    println!("merge trace (values non-increasing):");
    for (m, step) in trace.steps.iter().enumerate() {
        println!(
            "  step {}: {:?} + {:?} at affinity {}",
            m, step.cluster_a, step.cluster_b, step.value
        );
    }
    println!(
        "partition sizes after each step: {:?}",
        trace.partition_sizes
    );

    // The chain engine is O(n^2); the reference engine rescans the whole
    // table every step. They must agree.
    let (dend_ref, trace_ref) = cluster_dot_reference(&aff).unwrap();
    assert!(dend.isomorphic(&dend_ref).unwrap());
    assert_eq!(trace.steps.len(), trace_ref.steps.len());
    println!("\nchain engine agrees with the naive reference");

    // Undo the last k-1 merges to get k flat clusters.
    for k in [2, 3, 6] {
        println!("flat cut k={}: {:?}", k, flat_cut(&dend, k).unwrap());
    }

    // The dendrogram itself, as Newick.
    println!("\nnewick: {}", dend.to_newick().unwrap());
}
