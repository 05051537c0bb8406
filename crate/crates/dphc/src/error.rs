use std::error;
use std::fmt;
use std::io;
use std::result;

/// A type alias for `Result<T, Error>`.
pub type Result<T> = result::Result<T, Error>;

/// Errors reported by the clustering, simulation and evaluation routines.
///
/// Structural defects of a dendrogram are not errors; they are reported by
/// [`Dendrogram::validate`](crate::dendrogram::Dendrogram::validate) as a
/// [`Violation`](crate::dendrogram::Violation) value instead.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A vertex id was not found in the dendrogram.
    UnknownVertex(usize),
    /// Two vertices in the input share the same id.
    DuplicateVertex(usize),
    /// The dendrogram is structurally broken (no unique root, or a
    /// parent-pointer cycle), so tree queries are not defined on it.
    InvalidStructure(String),
    /// The operation needs more vertices or samples than were supplied.
    TooSmall {
        what: &'static str,
        min: usize,
        got: usize,
    },
    /// The leaf sets of two dendrograms (or a dendrogram and an assignment)
    /// do not line up.
    LeafSetMismatch(String),
    /// A sample index has no assigned vertex.
    UnassignedSample(usize),
    /// A height ordering precondition was violated.
    HeightOrder {
        vertex: usize,
        height: f64,
        parent_height: f64,
    },
    /// A matrix entry is NaN or infinite.
    NonFinite { row: usize, col: usize },
    /// Row `row` has zero norm, so a cosine affinity is undefined for it.
    ZeroNormRow(usize),
    /// Two matrices that must agree in shape do not.
    ShapeMismatch { expected: usize, got: usize },
    /// An affinity-mode matrix was supplied where a distance-mode matrix was
    /// expected, or vice versa.
    ModeMismatch {
        expected: &'static str,
        got: &'static str,
    },
    /// A rank argument lies outside its valid range.
    RankOutOfRange { r: usize, max: usize },
    /// One half of a data split is identically zero, so rank selection is
    /// undefined.
    DegenerateSplit,
    /// A point set handed to the transport solver is empty.
    EmptyPointSet,
    /// Every item is tied in one of the two rankings, so Kendall's tau-b has
    /// a zero denominator.
    DegenerateRanking,
    /// Every per-sample ranking comparison was degenerate.
    AllDegenerate,
    /// A generative tree specification is inconsistent.
    InvalidTreeSpec(String),
    /// A catch-all for invalid argument combinations.
    InvalidArgument(String),
    /// Malformed input while parsing a file.
    Parse(String),
    /// An underlying I/O failure.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownVertex(v) => write!(f, "unknown vertex id: {}", v),
            Error::DuplicateVertex(v) => write!(f, "duplicate vertex id: {}", v),
            Error::InvalidStructure(msg) => write!(f, "invalid tree structure: {}", msg),
            Error::TooSmall { what, min, got } => {
                write!(f, "need at least {} {}, got {}", min, what, got)
            }
            Error::LeafSetMismatch(msg) => write!(f, "leaf set mismatch: {}", msg),
            Error::UnassignedSample(i) => write!(f, "sample {} has no assigned vertex", i),
            Error::HeightOrder {
                vertex,
                height,
                parent_height,
            } => write!(
                f,
                "height order violated at vertex {}: {} < parent height {}",
                vertex, height, parent_height
            ),
            Error::NonFinite { row, col } => {
                write!(f, "non-finite entry at ({}, {})", row, col)
            }
            Error::ZeroNormRow(i) => {
                write!(f, "row {} has zero norm; cosine affinity undefined", i)
            }
            Error::ShapeMismatch { expected, got } => {
                write!(f, "shape mismatch: expected {}, got {}", expected, got)
            }
            Error::ModeMismatch { expected, got } => {
                write!(
                    f,
                    "matrix mode mismatch: expected {}, got {}",
                    expected, got
                )
            }
            Error::RankOutOfRange { r, max } => {
                write!(f, "rank {} out of range (valid: 1..={})", r, max)
            }
            Error::DegenerateSplit => write!(f, "a split half is identically zero"),
            Error::EmptyPointSet => write!(f, "empty point set"),
            Error::DegenerateRanking => {
                write!(f, "all items tied in a ranking; tau-b undefined")
            }
            Error::AllDegenerate => {
                write!(f, "every per-sample ranking comparison was degenerate")
            }
            Error::InvalidTreeSpec(msg) => write!(f, "invalid tree spec: {}", msg),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {}", msg),
            Error::Parse(msg) => write!(f, "parse error: {}", msg),
            Error::Io(msg) => write!(f, "i/o error: {}", msg),
        }
    }
}

impl error::Error for Error {}

impl From<io::Error> for Error {
    fn from(err: io::Error) -> Error {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Error {
        Error::Parse(err.to_string())
    }
}
