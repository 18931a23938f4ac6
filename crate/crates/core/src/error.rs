use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("covariance matrix is not positive definite")]
    NonElliptic,
    #[error("parameters are not symmetric")]
    NotSymmetric,
    #[error("operation requires symmetric parameters")]
    SymmetryRequired,
    #[error("branch points are not real")]
    ComplexRoots,
    #[error("point lies on a branch cut")]
    OnCut,
    #[error("point does not lie on the branch cut")]
    NotOnCut,
    #[error("point is within tolerance of a region boundary")]
    RegionAmbiguous,
    #[error("corner push-back did not terminate")]
    StuckAtCorner,
    #[error("parameters violate the recurrence conditions")]
    NonRecurrent,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("evaluation point outside the estimator domain")]
    DomainViolation,
    #[error("boundary was visited too rarely for estimation")]
    InsufficientBoundaryVisits,
    #[error("a required estimate is missing")]
    MissingEstimate,
    #[error("no cutoff satisfies the requested bias tolerance")]
    CutoffTooTight,
    #[error("determinant vanishes at this point")]
    DeltaZero,
    #[error("coefficient vanishes at this point")]
    CoefficientZero,
    #[error("point outside the domain of the map")]
    OutsideDomain,
    #[error("linear system is numerically singular")]
    SingularSystem,
    #[error("solution is inconsistent with an analytic interior, a pole is likely")]
    PoleSuspected,
    #[error("a pole lies close to the evaluation point")]
    PoleNearby,
    #[error("point outside the wedge")]
    OutsideWedge,
    #[error("parameters are not in the closed-form family")]
    NotInFamily,
    #[error("parameter file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
