use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, FdnError>;

/// Which block of the system matrix a Schur complement needed to invert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Feedback,
    Direct,
}

impl std::fmt::Display for Block {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Block::Feedback => write!(f, "feedback matrix A"),
            Block::Direct => write!(f, "direct gain matrix D"),
        }
    }
}

#[derive(Debug, Error)]
pub enum FdnError {
    #[error("invalid delay vector: {0}")]
    InvalidDelays(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("transfer function has a pole at z = {z}")]
    PoleEvaluation { z: Complex64 },

    #[error("singular {0}")]
    SingularBlock(Block),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("system is unstable: largest pole modulus {max_modulus:.6}")]
    Unstable {
        max_modulus: f64,
        poles: Vec<Complex64>,
    },

    #[error("eigenvalue iteration did not converge for a {0}x{0} matrix")]
    NoConvergence(usize),

    #[error("degenerate polynomial: leading coefficient is zero")]
    DegeneratePolynomial,

    #[error("numerically ill-conditioned interpolation (residual {residual:.3e})")]
    Conditioning { residual: f64 },

    #[error("not uniallpass-certifiable: {0}")]
    NotCertifiable(String),

    #[error("matrix is not fully connected: zero entry at ({row}, {col})")]
    NotFullyConnected { row: usize, col: usize },

    #[error("feedback matrix is not uniallpass-admissible: {0}")]
    NotAdmissible(String),

    #[error("completion failed: assembled system matrix residual {residual:.3e}")]
    CompletionFailure { residual: f64 },

    #[error("no rank-1 consistent root assignment")]
    NoRank1Solution,

    #[error("rank-1 pivot is degenerate for every candidate pivot")]
    PivotDegenerate,

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("interleaving violated at pair {index}")]
    InterleavingViolation { index: usize },

    #[error("Cauchy nodes nearly coincide: d[{row}] - dq[{col}] = {gap:.3e}")]
    NearSingularCauchy { row: usize, col: usize, gap: f64 },

    #[error("serialization error: {0}")]
    Format(String),
}
