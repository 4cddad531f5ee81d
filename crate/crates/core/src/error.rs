use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no fermionic basis with {n} particles in {d} modes")]
    InfeasibleBasis { d: usize, n: usize },

    #[error("dimension {size} exceeds the configured cap of {cap} entries")]
    DimensionOverflow { size: usize, cap: usize },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("not a state: eigenvalue {min_eigenvalue:e} is negative")]
    NotAState { min_eigenvalue: f64 },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("state is not translation invariant (max deviation {deviation:e})")]
    NotTranslationInvariant { deviation: f64 },

    #[error("correlator table is inconsistent (imaginary residue {residue:e})")]
    InconsistentTable { residue: f64 },

    #[error("eigenstate {index} is degenerate (gap {gap:e}); use the negativity instead")]
    DegenerateEigenstate { index: usize, gap: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
