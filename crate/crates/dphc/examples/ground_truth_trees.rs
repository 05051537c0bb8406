//! Working with dendrograms directly: geometric queries, augmenting a true
//! tree with observation leaves, and the export formats (JSON, Newick,
//! linkage CSV).
//!
//! Run with `cargo run --release --example ground_truth_trees`.

use dphc::affinity::affinity_data;
use dphc::agglomerate::cluster_dot;
use dphc::dendrogram::{Dendrogram, LeafAssignment, Node};
use dphc::genmodel::{builtin_tree_e1, sample_additive, true_dendrogram};
use dphc::io::LinkageFlavor;

fn main() {
    // A small tree built by hand: heights grow away from the root.
    let d = Dendrogram::from_nodes(&[
        Node::new(6, None, 1.0),
        Node::new(4, Some(6), 2.0),
        Node::new(5, Some(6), 3.0),
        Node::new(0, Some(4), 5.0),
        Node::new(1, Some(4), 4.0),
        Node::new(2, Some(5), 4.0),
        Node::new(3, Some(5), 6.0),
    ])
    .unwrap();
    assert_eq!(d.validate(), Ok(()));
    println!("mrca(0, 1) = {}", d.mrca(0, 1).unwrap());
    println!("merge_height(0, 1) = {}", d.merge_height(0, 1).unwrap());
    println!("tree_distance(2, 3) = {}", d.tree_distance(2, 3).unwrap());
    println!("min branch length = {}", d.min_branch_length().unwrap());

    // Attach observations: three samples at vertex 0, one at 1, two at 3.
    // Vertex 2 receives none and is pruned from the augmented tree.
    let z = LeafAssignment(vec![0, 0, 0, 1, 3, 3]);
    let heights = vec![5.5, 5.5, 5.5, 4.5, 6.5, 6.5];
    let augmented = d.augment(&z, &heights).unwrap();
    println!(
        "\naugmented: {} vertices ({} samples), vertex 2 pruned: {}",
        augmented.len(),
        augmented.sample_leaf_count().unwrap(),
        !augmented.contains(2)
    );
    println!("augmented newick: {}", augmented.to_newick().unwrap());

    // Round trip through the JSON format.
    let text = augmented.to_json();
    let back = Dendrogram::from_json(&text).unwrap();
    assert!(augmented.isomorphic(&back).unwrap());
    println!("JSON round trip: isomorphic, {} bytes", text.len());

    // A clustering run exports a linkage matrix in two flavors: raw merge
    // affinities, and affinities subtracted from the maximum so standard
    // dendrogram tooling (which expects growing values) can draw it.
    let spec = builtin_tree_e1();
    let draw = sample_additive(&spec, 12, 500, 9).unwrap();
    let (est, trace) = cluster_dot(&affinity_data(&draw.y)).unwrap();
    let dir = std::env::temp_dir().join("dphc_ground_truth_trees");
    std::fs::create_dir_all(&dir).unwrap();
    dphc::io::write_linkage_csv(&dir.join("linkage_raw.csv"), &trace, 12, LinkageFlavor::Raw)
        .unwrap();
    dphc::io::write_linkage_csv(
        &dir.join("linkage_distance.csv"),
        &trace,
        12,
        LinkageFlavor::SubtractFromMax,
    )
    .unwrap();
    dphc::io::write_text(&dir.join("estimate.json"), &est.to_json()).unwrap();
    dphc::io::write_text(
        &dir.join("truth.json"),
        &true_dendrogram(&spec).unwrap().to_json(),
    )
    .unwrap();
    println!("\nwrote linkage + dendrogram files under {}", dir.display());
}
