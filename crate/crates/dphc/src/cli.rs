//! Command-line front end: reproducible simulate / cluster / evaluate /
//! compare / convergence pipelines over the stable file formats in
//! [`crate::io`]. Every command is deterministic given its inputs, flags
//! and `--seed`.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::affinity::{
    affinity_cosine, affinity_data, affinity_pca, pairwise_distance, AffinityMatrix, DataMatrix,
    Metric, Mode,
};
use crate::agglomerate::{cluster_dot, cluster_generic, Linkage, Objective};
use crate::dendrogram::{merge_distortion, Dendrogram, LeafAssignment};
use crate::error::{Error, Result};
use crate::eval::{
    convergence_experiment, mean_tau_b_by, rankings_from_dendrogram, rankings_from_hierarchy,
    EstimatorKind, MeanTau, MergeOrder, TiedRanking,
};
use crate::genmodel::{builtin_tree_e1, sample_additive, TreeSpec};
use crate::io;
use crate::spectral::{pc_scores, select_rank_wasserstein, RankSelection};

/// Exit codes: 0 success, 2 validation error, 3 I/O error, 4 numeric
/// failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Parse(_) => 3,
        Error::NonFinite { .. }
        | Error::DegenerateRanking
        | Error::AllDegenerate
        | Error::DegenerateSplit => 4,
        _ => 2,
    }
}

/// Parses arguments, runs, returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", err);
            exit_code(&err)
        }
    }
}

#[derive(Parser)]
#[command(
    name = "dphc",
    version,
    about = "Hierarchical structure recovery by dot-product agglomerative clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Bin,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Data,
    Pca,
    Cosine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LinkageArg {
    /// Max-affinity merging with size-weighted average updates.
    Dot,
    Average,
    Complete,
    Single,
    Ward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    /// Higher merge value = merges sooner (affinity trees).
    Higher,
    /// Lower merge value = merges sooner (distance trees).
    Lower,
}

#[derive(Subcommand)]
enum Command {
    /// Draw from the generative model; writes the data matrix, the
    /// assignments, the true dendrogram and the true affinities.
    Simulate {
        /// Tree spec JSON path, or "e1" for the built-in 8-vertex tree.
        spec: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        /// Observation noise level; defaults to the tree spec's value.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Matrix file format (binary by default; CSV for inspection).
        #[arg(long, value_enum, default_value = "bin")]
        format: FormatArg,
    },
    /// Cluster a data matrix; writes dendrogram JSON, Newick, and linkage
    /// CSVs in raw and subtract-from-max flavors.
    Cluster {
        matrix: PathBuf,
        #[arg(long, value_enum)]
        estimator: EstimatorArg,
        #[arg(long, value_enum, default_value = "dot")]
        linkage: LinkageArg,
        /// PCA rank; when absent with --estimator pca, Wasserstein rank
        /// selection runs and its curve is written next to the outputs.
        #[arg(long)]
        r: Option<usize>,
        /// Largest rank the selection sweep considers.
        #[arg(long)]
        r_max: Option<usize>,
        /// Shuffle rows (seeded) before the selection split; the split is
        /// otherwise the first half in file order.
        #[arg(long)]
        shuffle_split: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an estimated dendrogram against ground truth: mean Kendall
    /// tau-b (and merge distortion when the truth is a dendrogram).
    Evaluate {
        #[arg(long)]
        dendrogram: PathBuf,
        /// Label hierarchy CSV (one row per sample, coarse to fine).
        #[arg(long, conflicts_with_all = ["truth", "assignment"])]
        labels: Option<PathBuf>,
        /// True dendrogram JSON; requires --assignment.
        #[arg(long, requires = "assignment")]
        truth: Option<PathBuf>,
        /// Assignment CSV mapping samples to true-dendrogram vertices.
        #[arg(long, requires = "truth")]
        assignment: Option<PathBuf>,
        /// How the estimate's merge values order closeness.
        #[arg(long, value_enum, default_value = "higher")]
        merge_order: OrderArg,
        /// Also write the report to a file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several methods over one matrix and tabulate mean tau-b per
    /// (method, input) cell.
    Compare {
        matrix: PathBuf,
        #[arg(long, conflicts_with_all = ["truth", "assignment"])]
        labels: Option<PathBuf>,
        #[arg(long, requires = "assignment")]
        truth: Option<PathBuf>,
        #[arg(long, requires = "truth")]
        assignment: Option<PathBuf>,
        /// Comma-separated: dot, cosine, euclidean-upgma, manhattan-upgma,
        /// ward, euclidean-complete, euclidean-single, cosine-complete,
        /// cosine-single.
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<String>,
        /// Input representations: raw and/or pca.
        #[arg(long, value_delimiter = ',', default_values = ["raw", "pca"])]
        inputs: Vec<String>,
        /// PCA rank for the pca input; selected by the Wasserstein method
        /// when absent.
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        r_max: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep (n, p) grid points, simulating repeatedly and recording the
    /// max affinity-estimation error per estimator.
    Convergence {
        /// Tree spec JSON path, or "e1".
        spec: String,
        /// Grid points as NxP, comma-separated: e.g. 10x100,10x1000.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values = ["data"])]
        estimators: Vec<String>,
        #[arg(long)]
        seeds: usize,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            spec,
            n,
            p,
            sigma,
            seed,
            out,
            format,
        } => cmd_simulate(&spec, n, p, sigma, seed, &out, format),
        Command::Cluster {
            matrix,
            estimator,
            linkage,
            r,
            r_max,
            shuffle_split,
            seed,
            out,
        } => cmd_cluster(
            &matrix,
            estimator,
            linkage,
            r,
            r_max,
            shuffle_split,
            seed,
            &out,
        ),
        Command::Evaluate {
            dendrogram,
            labels,
            truth,
            assignment,
            merge_order,
            out,
        } => cmd_evaluate(
            &dendrogram,
            labels.as_deref(),
            truth.as_deref(),
            assignment.as_deref(),
            merge_order,
            out.as_deref(),
        ),
        Command::Compare {
            matrix,
            labels,
            truth,
            assignment,
            methods,
            inputs,
            r,
            r_max,
            seed,
            out,
        } => cmd_compare(
            &matrix,
            labels.as_deref(),
            truth.as_deref(),
            assignment.as_deref(),
            &methods,
            &inputs,
            r,
            r_max,
            seed,
            out.as_deref(),
        ),
        Command::Convergence {
            spec,
            grid,
            estimators,
            seeds,
            r,
            seed,
            out,
        } => cmd_convergence(&spec, &grid, &estimators, seeds, r, seed, &out),
    }
}

fn load_spec(arg: &str) -> Result<TreeSpec> {
    if arg == "e1" {
        Ok(builtin_tree_e1())
    } else {
        let text = std::fs::read_to_string(arg)?;
        TreeSpec::from_json(&text)
    }
}

fn cmd_simulate(
    spec_arg: &str,
    n: usize,
    p: usize,
    sigma: Option<f64>,
    seed: u64,
    out: &Path,
    format: FormatArg,
) -> Result<()> {
    let mut spec = load_spec(spec_arg)?;
    if let Some(s) = sigma {
        spec.sigma = s;
    }
    let draw = sample_additive(&spec, n, p, seed)?;
    std::fs::create_dir_all(out)?;
    let matrix_name = match format {
        FormatArg::Bin => "data.dpb",
        FormatArg::Csv => "data.csv",
    };
    io::write_matrix(&out.join(matrix_name), &draw.y)?;
    io::write_assignment_csv(&out.join("assignment.csv"), &draw.z)?;
    io::write_text(&out.join("truth.json"), &draw.truth.to_json())?;
    io::write_affinity_csv(&out.join("true_affinity.csv"), &draw.true_alpha)?;
    println!(
        "simulated n={} p={} seed={} -> {}",
        n,
        p,
        seed,
        out.display()
    );
    Ok(())
}

/// Scores plus the selection curve when one was computed.
struct PcaChoice {
    scores: crate::affinity::ScoreMatrix,
    r: usize,
    selection: Option<RankSelection>,
}

fn choose_pca(
    y: &DataMatrix,
    r: Option<usize>,
    r_max: Option<usize>,
    shuffle_split: bool,
    seed: u64,
) -> Result<PcaChoice> {
    let (r, selection) = match r {
        Some(r) => (r, None),
        None => {
            let cap = y.n().div_ceil(2).min(y.p());
            let r_max = r_max.unwrap_or(cap.min(50)).min(cap);
            let split_input = if shuffle_split {
                let mut order: Vec<usize> = (0..y.n()).collect();
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                order.shuffle(&mut rng);
                let mut values = Vec::with_capacity(y.n() * y.p());
                for &i in &order {
                    values.extend_from_slice(y.row(i));
                }
                DataMatrix::new(y.n(), y.p(), values)?
            } else {
                y.clone()
            };
            let sel = select_rank_wasserstein(&split_input, r_max)?;
            (sel.r_hat, Some(sel))
        }
    };
    let scores = pc_scores(y, r)?;
    Ok(PcaChoice {
        scores,
        r,
        selection,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_cluster(
    matrix: &Path,
    estimator: EstimatorArg,
    linkage: LinkageArg,
    r: Option<usize>,
    r_max: Option<usize>,
    shuffle_split: bool,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let y = io::read_matrix(matrix)?;
    std::fs::create_dir_all(out)?;

    let mut meta_r = None;
    let affinity: AffinityMatrix = match estimator {
        EstimatorArg::Data => affinity_data(&y),
        EstimatorArg::Cosine => affinity_cosine(&y)?,
        EstimatorArg::Pca => {
            let choice = choose_pca(&y, r, r_max, shuffle_split, seed)?;
            if let Some(sel) = &choice.selection {
                io::write_rank_selection_csv(&out.join("rank_selection.csv"), sel)?;
            }
            meta_r = Some(choice.r);
            affinity_pca(&choice.scores, y.p())?
        }
    };

    let (dend, trace) = match linkage {
        LinkageArg::Dot => cluster_dot(&affinity)?,
        LinkageArg::Average | LinkageArg::Complete | LinkageArg::Single => {
            if estimator != EstimatorArg::Cosine {
                return Err(Error::InvalidArgument(format!(
                    "linkage {:?} needs a distance; estimator {:?} yields an affinity (use --linkage dot)",
                    linkage, estimator
                )));
            }
            // Cosine distance 1 - cos; average linkage on it is the same
            // algorithm as dot clustering of the cosine affinity.
            let n = affinity.n();
            let mut dist = vec![0.0f64; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        dist[i * n + j] = 1.0 - affinity.get(i, j);
                    }
                }
            }
            let dmat = AffinityMatrix::from_values(n, Mode::Distance, dist)?;
            let link = match linkage {
                LinkageArg::Average => Linkage::Average,
                LinkageArg::Complete => Linkage::Complete,
                _ => Linkage::Single,
            };
            cluster_generic(&dmat, link, Objective::MinDistance)?
        }
        LinkageArg::Ward => {
            return Err(Error::InvalidArgument(
                "ward is a distance comparator; use the compare command".to_string(),
            ));
        }
    };

    if trace.negative_input_fraction > 0.0 {
        eprintln!(
            "warning: {:.1}% of off-diagonal affinities are negative; \
             the non-negative-affinity model may not fit these data",
            100.0 * trace.negative_input_fraction
        );
    }

    io::write_text(&out.join("dendrogram.json"), &dend.to_json())?;
    io::write_text(&out.join("dendrogram.newick"), &dend.to_newick()?)?;
    io::write_linkage_csv(
        &out.join("linkage_raw.csv"),
        &trace,
        y.n(),
        io::LinkageFlavor::Raw,
    )?;
    if trace.objective == Objective::MaxAffinity {
        io::write_linkage_csv(
            &out.join("linkage_distance.csv"),
            &trace,
            y.n(),
            io::LinkageFlavor::SubtractFromMax,
        )?;
    }
    let meta = serde_json::json!({
        "estimator": format!("{:?}", estimator).to_lowercase(),
        "linkage": format!("{:?}", linkage).to_lowercase(),
        "r": meta_r,
        "n": y.n(),
        "p": y.p(),
        "seed": seed,
        "negative_offdiagonal_fraction": trace.negative_input_fraction,
    });
    io::write_text(
        &out.join("meta.json"),
        &serde_json::to_string_pretty(&meta)?,
    )?;
    println!("clustered {} samples -> {}", y.n(), out.display());
    Ok(())
}

/// Ground truth for evaluation: per-sample rankings, plus the dendrogram
/// and assignment when the truth is model-based (enables distortion).
struct Truth {
    rankings: Vec<TiedRanking>,
    model: Option<(Dendrogram, LeafAssignment)>,
}

fn load_truth(
    labels: Option<&Path>,
    truth: Option<&Path>,
    assignment: Option<&Path>,
    expected_n: usize,
) -> Result<Truth> {
    match (labels, truth, assignment) {
        (Some(path), None, None) => {
            let h = io::read_labels_csv(path)?;
            if h.n() != expected_n {
                return Err(Error::LeafSetMismatch(format!(
                    "label file covers {} samples, data has {}",
                    h.n(),
                    expected_n
                )));
            }
            Ok(Truth {
                rankings: rankings_from_hierarchy(&h)?,
                model: None,
            })
        }
        (None, Some(tpath), Some(apath)) => {
            let truth = Dendrogram::from_json(&std::fs::read_to_string(tpath)?)?;
            let z = io::read_assignment_csv(apath)?;
            if z.len() != expected_n {
                return Err(Error::LeafSetMismatch(format!(
                    "assignment covers {} samples, data has {}",
                    z.len(),
                    expected_n
                )));
            }
            // Per-sample truth rankings come from the augmented dendrogram,
            // whose sample-pair merge heights equal the model's affinities.
            let heights: Vec<f64> =
                z.0.iter()
                    .map(|&v| truth.height_of(v))
                    .collect::<Result<_>>()?;
            let augmented = truth.augment(&z, &heights)?;
            Ok(Truth {
                rankings: rankings_from_dendrogram(&augmented)?,
                model: Some((truth, z)),
            })
        }
        _ => Err(Error::InvalidArgument(
            "supply either --labels or both --truth and --assignment".to_string(),
        )),
    }
}

fn cmd_evaluate(
    dendrogram: &Path,
    labels: Option<&Path>,
    truth: Option<&Path>,
    assignment: Option<&Path>,
    merge_order: OrderArg,
    out: Option<&Path>,
) -> Result<()> {
    let est = Dendrogram::from_json(&std::fs::read_to_string(dendrogram)?)?;
    let n = est.sample_leaf_count().ok_or_else(|| {
        Error::LeafSetMismatch("estimate leaves are not the samples 0..n".to_string())
    })?;
    let truth = load_truth(labels, truth, assignment, n)?;
    let order = match merge_order {
        OrderArg::Higher => MergeOrder::HigherIsCloser,
        OrderArg::Lower => MergeOrder::LowerIsCloser,
    };
    let tau = mean_tau_b_by(&truth.rankings, &est, order)?;
    let mut report = format!(
        "mean_tau_b,{}\nstderr,{}\nused,{}\nexcluded,{}\n",
        tau.mean, tau.stderr, tau.used, tau.excluded
    );
    if let Some((truth_dend, z)) = &truth.model {
        let distortion = merge_distortion(truth_dend, z, &est)?;
        report.push_str(&format!("merge_distortion,{}\n", distortion));
    }
    print!("{}", report);
    if let Some(path) = out {
        io::write_text(path, &report)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Dot,
    Cosine,
    EuclideanUpgma,
    ManhattanUpgma,
    Ward,
    EuclideanComplete,
    EuclideanSingle,
    CosineComplete,
    CosineSingle,
}

impl Method {
    fn parse(name: &str) -> Result<Method> {
        match name {
            "dot" => Ok(Method::Dot),
            "cosine" => Ok(Method::Cosine),
            "euclidean-upgma" | "euclidean" => Ok(Method::EuclideanUpgma),
            "manhattan-upgma" | "manhattan" => Ok(Method::ManhattanUpgma),
            "ward" => Ok(Method::Ward),
            "euclidean-complete" => Ok(Method::EuclideanComplete),
            "euclidean-single" => Ok(Method::EuclideanSingle),
            "cosine-complete" => Ok(Method::CosineComplete),
            "cosine-single" => Ok(Method::CosineSingle),
            other => Err(Error::InvalidArgument(format!(
                "unknown method: {:?}",
                other
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Method::Dot => "dot",
            Method::Cosine => "cosine",
            Method::EuclideanUpgma => "euclidean-upgma",
            Method::ManhattanUpgma => "manhattan-upgma",
            Method::Ward => "ward",
            Method::EuclideanComplete => "euclidean-complete",
            Method::EuclideanSingle => "euclidean-single",
            Method::CosineComplete => "cosine-complete",
            Method::CosineSingle => "cosine-single",
        }
    }
}

/// Clusters `y` with one method and scores it against the truth rankings.
pub(crate) fn run_method(
    method_name: &str,
    y: &DataMatrix,
    truth_rankings: &[TiedRanking],
) -> Result<MeanTau> {
    let method = Method::parse(method_name)?;
    let (dend, order): (Dendrogram, MergeOrder) = match method {
        Method::Dot => {
            let (d, _) = cluster_dot(&affinity_data(y))?;
            (d, MergeOrder::HigherIsCloser)
        }
        Method::Cosine => {
            let (d, _) = cluster_dot(&affinity_cosine(y)?)?;
            (d, MergeOrder::HigherIsCloser)
        }
        Method::EuclideanUpgma
        | Method::ManhattanUpgma
        | Method::EuclideanComplete
        | Method::EuclideanSingle => {
            let metric = if method == Method::ManhattanUpgma {
                Metric::Manhattan
            } else {
                Metric::Euclidean
            };
            let linkage = match method {
                Method::EuclideanComplete => Linkage::Complete,
                Method::EuclideanSingle => Linkage::Single,
                _ => Linkage::Average,
            };
            let dist = pairwise_distance(y, metric);
            let (d, _) = cluster_generic(&dist, linkage, Objective::MinDistance)?;
            (d, MergeOrder::LowerIsCloser)
        }
        Method::CosineComplete | Method::CosineSingle => {
            let cos = affinity_cosine(y)?;
            let n = cos.n();
            let mut dist = vec![0.0f64; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        dist[i * n + j] = 1.0 - cos.get(i, j);
                    }
                }
            }
            let dmat = AffinityMatrix::from_values(n, Mode::Distance, dist)?;
            let linkage = if method == Method::CosineComplete {
                Linkage::Complete
            } else {
                Linkage::Single
            };
            let (d, _) = cluster_generic(&dmat, linkage, Objective::MinDistance)?;
            (d, MergeOrder::LowerIsCloser)
        }
        Method::Ward => {
            let dist = pairwise_distance(y, Metric::Euclidean);
            let n = dist.n();
            let squared: Vec<f64> = dist.values().iter().map(|v| v * v).collect();
            let dmat = AffinityMatrix::from_values(n, Mode::Distance, squared)?;
            let (d, _) = cluster_generic(&dmat, Linkage::Ward, Objective::MinDistance)?;
            (d, MergeOrder::LowerIsCloser)
        }
    };
    mean_tau_b_by(truth_rankings, &dend, order)
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    matrix: &Path,
    labels: Option<&Path>,
    truth: Option<&Path>,
    assignment: Option<&Path>,
    methods: &[String],
    inputs: &[String],
    r: Option<usize>,
    r_max: Option<usize>,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    if methods.is_empty() {
        return Err(Error::InvalidArgument("empty method list".to_string()));
    }
    let mut seen: Vec<Method> = Vec::new();
    for name in methods {
        let method = Method::parse(name)?; // fail fast on unknown names
        if seen.contains(&method) {
            eprintln!("warning: duplicate method {:?} ignored", name);
        } else {
            seen.push(method);
        }
    }
    let y = io::read_matrix(matrix)?;
    let truth = load_truth(labels, truth, assignment, y.n())?;

    let mut input_matrices: Vec<(String, DataMatrix)> = Vec::new();
    for input in inputs {
        match input.as_str() {
            "raw" => input_matrices.push(("raw".to_string(), y.clone())),
            "pca" => {
                let choice = choose_pca(&y, r, r_max, false, seed)?;
                let scores = DataMatrix::new(
                    choice.scores.n(),
                    choice.scores.r(),
                    choice.scores.values().to_vec(),
                )?;
                input_matrices.push((format!("pca(r={})", choice.r), scores));
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown input: {:?}",
                    other
                )));
            }
        }
    }

    let mut rows = Vec::new();
    for method in &seen {
        for (input_name, input) in &input_matrices {
            let tau = run_method(method.name(), input, &truth.rankings)?;
            rows.push((method.name().to_string(), input_name.clone(), tau));
        }
    }
    let mut table = String::from("method,input,mean_tau_b,stderr,excluded\n");
    for (m, i, tau) in &rows {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            m, i, tau.mean, tau.stderr, tau.excluded
        ));
    }
    print!("{}", table);
    if let Some(path) = out {
        io::write_comparison_csv(path, &rows)?;
    }
    Ok(())
}

fn cmd_convergence(
    spec_arg: &str,
    grid: &[String],
    estimators: &[String],
    seeds: usize,
    r: Option<usize>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let spec = load_spec(spec_arg)?;
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".to_string()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for g in grid {
        let (n, p) = g
            .split_once('x')
            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
            .ok_or_else(|| Error::Parse(format!("grid point {:?} is not NxP", g)))?;
        points.push((n, p));
    }
    let mut all_rows = Vec::new();
    for est_name in estimators {
        let estimator: EstimatorKind = est_name.parse()?;
        let rows = convergence_experiment(&spec, &points, estimator, r, seeds, seed)?;
        all_rows.extend(rows);
    }
    std::fs::create_dir_all(out)?;
    io::write_convergence_csv(&out.join("convergence.csv"), &all_rows)?;
    io::write_convergence_long_csv(&out.join("convergence_long.csv"), &all_rows)?;
    for row in &all_rows {
        println!(
            "n={} p={} {}: mean max error {} (std {})",
            row.n,
            row.p,
            row.estimator.as_str(),
            row.mean_err,
            row.std_err
        );
    }
    Ok(())
}
