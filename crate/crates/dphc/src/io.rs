//! Stable file formats: data matrices (CSV and a raw binary layout),
//! affinity tables, assignments, label hierarchies, rank-selection curves
//! and linkage matrices. Floats are written in shortest round-trip form.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::affinity::{AffinityMatrix, DataMatrix, Mode};
use crate::agglomerate::MergeTrace;
use crate::dendrogram::LeafAssignment;
use crate::error::{Error, Result};
use crate::eval::{ConvergenceRow, LabelHierarchy, MeanTau};
use crate::spectral::RankSelection;

const MAGIC: &[u8; 4] = b"DPHC";

/// Writes a matrix as CSV (`n,p` header, then dense rows) when the path
/// ends in `.csv`, otherwise in the binary layout: magic `DPHC`, two
/// little-endian u64 counts, then row-major little-endian f64 values.
pub fn write_matrix(path: &Path, y: &DataMatrix) -> Result<()> {
    if path.extension().is_some_and(|e| e == "csv") {
        let mut out = String::new();
        out.push_str(&format!("{},{}\n", y.n(), y.p()));
        for i in 0..y.n() {
            push_row(&mut out, y.row(i));
        }
        fs::write(path, out)?;
    } else {
        let mut buf = Vec::with_capacity(4 + 16 + 8 * y.n() * y.p());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(y.n() as u64).to_le_bytes());
        buf.extend_from_slice(&(y.p() as u64).to_le_bytes());
        for &v in y.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(path, buf)?;
    }
    Ok(())
}

/// Reads a matrix in either format, deciding by the magic bytes.
pub fn read_matrix(path: &Path) -> Result<DataMatrix> {
    let bytes = fs::read(path)?;
    if bytes.len() >= 4 && &bytes[..4] == MAGIC {
        if bytes.len() < 20 {
            return Err(Error::Parse("truncated binary matrix".to_string()));
        }
        let n = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        let p = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let expected = 20 + 8 * n * p;
        if bytes.len() != expected {
            return Err(Error::Parse(format!(
                "binary matrix: expected {} bytes, found {}",
                expected,
                bytes.len()
            )));
        }
        let values: Vec<f64> = bytes[20..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        DataMatrix::new(n, p, values)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Parse("matrix file is neither binary nor UTF-8 CSV".into()))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let (n, p) = parse_two_counts(header)?;
        let mut values = Vec::with_capacity(n * p);
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            if k >= n {
                return Err(Error::Parse(format!("more than {} data rows", n)));
            }
            parse_row(line, p, &mut values)?;
        }
        DataMatrix::new(n, p, values)
    }
}

/// Affinity CSV: header `n,mode`, then dense rows (diagonal included).
pub fn write_affinity_csv(path: &Path, a: &AffinityMatrix) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{},{}\n", a.n(), a.mode().as_str()));
    for i in 0..a.n() {
        push_row(&mut out, a.row(i));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_affinity_csv(path: &Path) -> Result<AffinityMatrix> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty affinity file".into()))?;
    let mut parts = header.split(',');
    let n: usize = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse("affinity header must be n,mode".into()))?;
    let mode: Mode = parts
        .next()
        .ok_or_else(|| Error::Parse("affinity header must be n,mode".into()))?
        .trim()
        .parse()?;
    let mut values = Vec::with_capacity(n * n);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        parse_row(line, n, &mut values)?;
    }
    AffinityMatrix::from_values(n, mode, values)
}

/// Assignment CSV: `sample,vertex` header plus one row per sample.
pub fn write_assignment_csv(path: &Path, z: &LeafAssignment) -> Result<()> {
    let mut out = String::from("sample,vertex\n");
    for (i, &v) in z.0.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i, v));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_assignment_csv(path: &Path) -> Result<LeafAssignment> {
    let text = fs::read_to_string(path)?;
    let mut z = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if k == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let sample: usize = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad assignment row: {:?}", line)))?;
        let vertex: usize = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad assignment row: {:?}", line)))?;
        if sample != z.len() {
            return Err(Error::Parse(format!(
                "assignment rows out of order at sample {}",
                sample
            )));
        }
        z.push(vertex);
    }
    Ok(LeafAssignment(z))
}

/// Label CSV: one row per sample, comma-separated labels ordered coarse to
/// fine. No header.
pub fn read_labels_csv(path: &Path) -> Result<LabelHierarchy> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(line.split(',').map(|s| s.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty label file".to_string()));
    }
    let depth = rows[0].len();
    if rows.iter().any(|r| r.len() != depth) {
        return Err(Error::Parse(
            "label rows have differing level counts".to_string(),
        ));
    }
    let levels: Vec<Vec<String>> = (0..depth)
        .map(|l| rows.iter().map(|r| r[l].clone()).collect())
        .collect();
    LabelHierarchy::new(levels)
}

/// Rank-selection CSV: `r,d_r` rows and a `r_hat,<value>` footer.
pub fn write_rank_selection_csv(path: &Path, sel: &RankSelection) -> Result<()> {
    let mut out = String::from("r,d_r\n");
    for &(r, d) in &sel.curve {
        out.push_str(&format!("{},{}\n", r, d));
    }
    out.push_str(&format!("r_hat,{}\n", sel.r_hat));
    fs::write(path, out)?;
    Ok(())
}

/// Which value column a linkage export carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkageFlavor {
    /// Merge values as produced by the engine.
    Raw,
    /// Merge affinities subtracted from the largest pairwise affinity, so
    /// values grow along the merge sequence the way standard dendrogram
    /// tooling expects. Only meaningful for max-affinity traces, where the
    /// largest pairwise affinity is the first merge value.
    SubtractFromMax,
}

/// Linkage CSV: header `a,b,value,size`, one row per merge. Cluster ids
/// follow the usual convention: samples are `0..n`, the cluster formed at
/// step m is `n + m`.
pub fn write_linkage_csv(
    path: &Path,
    trace: &MergeTrace,
    n: usize,
    flavor: LinkageFlavor,
) -> Result<()> {
    let rows = trace.linkage_rows(n)?;
    let base = match flavor {
        LinkageFlavor::Raw => None,
        LinkageFlavor::SubtractFromMax => {
            if trace.objective != crate::agglomerate::Objective::MaxAffinity {
                return Err(Error::InvalidArgument(
                    "subtract-from-max flavor needs a max-affinity trace".to_string(),
                ));
            }
            Some(trace.steps.first().map(|s| s.value).unwrap_or(0.0))
        }
    };
    let mut out = String::from("a,b,value,size\n");
    for (a, b, value, size) in rows {
        let v = match base {
            Some(m) => m - value,
            None => value,
        };
        out.push_str(&format!("{},{},{},{}\n", a, b, v, size));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Convergence table CSV: `n,p,estimator,mean_err,std_err_err`.
pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut out = String::from("n,p,estimator,mean_err,std_err_err\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.n,
            row.p,
            row.estimator.as_str(),
            row.mean_err,
            row.std_err
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Per-seed long format for plotting: `n,p,estimator,seed,max_err`.
pub fn write_convergence_long_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut out = String::from("n,p,estimator,seed,max_err\n");
    for row in rows {
        for (s, err) in row.errors.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.n,
                row.p,
                row.estimator.as_str(),
                s,
                err
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Comparison table CSV: `method,input,mean_tau_b,stderr,excluded`.
pub fn write_comparison_csv(path: &Path, rows: &[(String, String, MeanTau)]) -> Result<()> {
    let mut out = String::from("method,input,mean_tau_b,stderr,excluded\n");
    for (method, input, tau) in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            method, input, tau.mean, tau.stderr, tau.excluded
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn push_row(out: &mut String, row: &[f64]) {
    for (k, v) in row.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&format!("{}", v));
    }
    out.push('\n');
}

fn parse_two_counts(line: &str) -> Result<(usize, usize)> {
    let mut parts = line.split(',');
    let a = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad count header: {:?}", line)))?;
    let b = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad count header: {:?}", line)))?;
    Ok((a, b))
}

fn parse_row(line: &str, expected: usize, values: &mut Vec<f64>) -> Result<()> {
    let mut count = 0;
    for field in line.split(',') {
        let v: f64 = field
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad float: {:?}", field)))?;
        values.push(v);
        count += 1;
    }
    if count != expected {
        return Err(Error::Parse(format!(
            "expected {} fields per row, found {}",
            expected, count
        )));
    }
    Ok(())
}
