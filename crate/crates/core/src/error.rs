use thiserror::Error;

use crate::lattice::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site index {site} out of range for a lattice of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("self-coupling on site {0}")]
    SelfCoupling(usize),

    #[error("{n_sites} sites exceeds the limit of {limit} for this path")]
    TooManySites { n_sites: usize, limit: usize },

    #[error("operator is not Hermitian (max |M - M^H| = {0:e})")]
    NotHermitian(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("site {0} is not part of the state")]
    SiteNotInState(usize),

    #[error("cannot reduce onto an empty site set")]
    EmptyKeep,

    #[error("numerical integrity: {0}")]
    NumericalIntegrity(String),

    #[error("Gibbs weights overflowed at beta = {0}; use the ground-space path instead")]
    GibbsOverflow(f64),

    #[error("nonzero field on interface site {0}")]
    InterfaceField(usize),

    #[error("shielding hypotheses violated:\n{0}")]
    Hypotheses(ValidationReport),

    #[error("classical enumeration requires zero transverse fields (site {0} has a field)")]
    NonzeroField(usize),

    #[error("interface is frustrated: path signs between {0} and {1} are inconsistent")]
    Frustrated(usize, usize),

    #[error("interface sites {0} and {1} are not connected inside the interface")]
    Disconnected(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("scenario error: {0}")]
    Semantic(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
