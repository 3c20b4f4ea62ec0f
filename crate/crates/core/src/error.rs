use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical layers.
///
/// Some variants are mathematical verdicts rather than failures (see
/// [`Error::is_verdict`]): a cocycle that is not uniformly hyperbolic, or a
/// conjugacy that winds, is a legitimate answer about the input.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("insufficient continued-fraction depth: {0}")]
    InsufficientDepth(String),
    #[error("point outside the strip: |Im z| = {im} > {radius}")]
    OutsideStrip { im: f64, radius: f64 },
    #[error("singular matrix")]
    SingularMatrix,
    #[error("invariant directions did not converge: {0}")]
    NoConvergence(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("{n_prime} is not a multiple of {n}")]
    NotMultiple { n: usize, n_prime: usize },
    #[error("coincident directions")]
    CoincidentDirections,
    #[error("weak hyperbolicity: min angle {min_angle:.3e} below {tol:.3e}")]
    WeakHyperbolicity { min_angle: f64, tol: f64 },
    #[error("degenerate boundary radius: {0}")]
    DegenerateRadius(String),
    #[error("twist is not a constant rotation (mismatch {mismatch:.3e})")]
    NonConstantTwist { mismatch: f64 },
    #[error("map is not near the rotation family (off-residual {off_residual:.3e})")]
    NotNearRotation { off_residual: f64 },
    #[error("small divisor at mode {mode}: |divisor| = {divisor:.3e}, |coefficient| = {coefficient:.3e}")]
    SmallDivisor {
        mode: i64,
        divisor: f64,
        coefficient: f64,
    },
    #[error("rotation part winds {winding} times around the circle")]
    WindingObstruction { winding: i64 },
    #[error("both symmetric pairings are too degenerate (min angles {u_pair:.3e}, {s_pair:.3e})")]
    WeakSymmetricAngle { u_pair: f64, s_pair: f64 },
    #[error("cocycle is not uniformly hyperbolic at height {height}")]
    NotUniformlyHyperbolic { height: f64 },
    #[error("frequency is rational; an irrational frequency is required")]
    RationalFrequency,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for errors that encode a mathematical verdict about the input
    /// (outside the regime of a theorem) as opposed to broken input.
    pub fn is_verdict(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence(_)
                | Error::WindingObstruction { .. }
                | Error::WeakHyperbolicity { .. }
                | Error::WeakSymmetricAngle { .. }
                | Error::NotUniformlyHyperbolic { .. }
                | Error::SmallDivisor { .. }
                | Error::NotNearRotation { .. }
                | Error::NonConstantTwist { .. }
                | Error::DegenerateRadius(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite(_) => "NonFinite",
            Error::InsufficientDepth(_) => "InsufficientDepth",
            Error::OutsideStrip { .. } => "OutsideStrip",
            Error::SingularMatrix => "SingularMatrix",
            Error::NoConvergence(_) => "NoConvergence",
            Error::DomainError(_) => "DomainError",
            Error::NotMultiple { .. } => "NotMultiple",
            Error::CoincidentDirections => "CoincidentDirections",
            Error::WeakHyperbolicity { .. } => "WeakHyperbolicity",
            Error::DegenerateRadius(_) => "DegenerateRadius",
            Error::NonConstantTwist { .. } => "NonConstantTwist",
            Error::NotNearRotation { .. } => "NotNearRotation",
            Error::SmallDivisor { .. } => "SmallDivisor",
            Error::WindingObstruction { .. } => "WindingObstruction",
            Error::WeakSymmetricAngle { .. } => "WeakSymmetricAngle",
            Error::NotUniformlyHyperbolic { .. } => "NotUniformlyHyperbolic",
            Error::RationalFrequency => "RationalFrequency",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}
