use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("region `{0}` has an empty spacelike complement")]
    EmptyComplement(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("not a projection: {0}")]
    NotProjection(String),
    #[error("element is not in the algebra (residual {0:e})")]
    NotInAlgebra(f64),
    #[error("invalid object `{label}`: {reason}")]
    InvalidObject { label: String, reason: String },
    #[error("no transporter from `{label}` to region `{region}`")]
    MissingTransporter { label: String, region: String },
    #[error("no pair of spacelike regions available for the symmetry")]
    NoSpacelikePair,
    #[error("symmetry depends on the transporter choice (discrepancy {0:e})")]
    SymmetryInconsistent(f64),
    #[error("not a scalar multiple of the unit (residual {0:e})")]
    NotScalar(f64),
    #[error("inconsistent results: {0}")]
    Inconsistent(String),
    #[error("{0}")]
    Undefined(String),
    #[error("document: {0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, Error>;
