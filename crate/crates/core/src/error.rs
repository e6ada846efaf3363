use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("root finder did not converge for degree {degree} after {iterations} iterations")]
    RootNonConvergence { degree: usize, iterations: usize },
    #[error("root residual {residual:e} exceeds bound {bound:e}")]
    RootResidual { residual: f64, bound: f64 },
    #[error("map does not fix the origin: value {value:e} at 0")]
    OriginNotFixed { value: f64 },
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("fixed point is not attracting (multiplier modulus {modulus})")]
    NotAttracting { modulus: f64 },
    #[error("seed cell at ({re}, {im}) does not converge; resolution too coarse")]
    SeedNotConverging { re: f64, im: f64 },
    #[error("point ({re}, {im}) is outside the {what}")]
    OutOfDomain { what: &'static str, re: f64, im: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("preimage expansion failed at depth {depth} from node ({re}, {im}): {source}")]
    Preimage {
        depth: usize,
        re: f64,
        im: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("zero crossing in generation {generation}: |f(z^2) - az| = {modulus:e} at z = ({re}, {im})")]
    ZeroCrossing { generation: usize, re: f64, im: f64, modulus: f64 },
    #[error("discriminant collapse in generation {generation}: |disc| = {modulus:e} at z = ({re}, {im})")]
    DiscriminantCollapse { generation: usize, re: f64, im: f64, modulus: f64 },
    #[error("branch tracking lost continuity in generation {generation} near z = ({re}, {im})")]
    BranchAmbiguity { generation: usize, re: f64, im: f64 },
    #[error("graph family did not converge: movements {movements:?}")]
    NoConvergence { movements: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
