//! How affinity estimation error scales with the data dimension: fix a
//! small sample count, grow p geometrically, and fit the log-log slope of
//! the mean worst-case error. The raw-data estimator follows a 1/sqrt(p)
//! law; at very small n the PCA estimator trails it.
//!
//! Run with `cargo run --release --example convergence_study`.

use dphc::eval::{convergence_experiment, EstimatorKind};
use dphc::genmodel::builtin_tree_e1;

fn main() {
    let spec = builtin_tree_e1();
    let grid = [(10, 100), (10, 1000), (10, 10_000)];
    let seeds = 100;

    for estimator in [EstimatorKind::Data, EstimatorKind::Pca] {
        let rows = convergence_experiment(&spec, &grid, estimator, None, seeds, 2024).unwrap();
        println!(
            "{} estimator ({} seeds per point):",
            estimator.as_str(),
            seeds
        );
        for row in &rows {
            println!(
                "  n={:>3} p={:>6}: mean max error {:.4} (std {:.4})",
                row.n, row.p, row.mean_err, row.std_err
            );
        }
        let xs: Vec<f64> = rows.iter().map(|r| (r.p as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.mean_err.ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
        println!("  log-log slope in p: {:.3}\n", slope);
    }
}
