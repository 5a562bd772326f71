use thiserror::Error;

/// Every failure the library can report.
///
/// Each variant maps to a stable category string (see [`Error::category`])
/// that the command-line tool prints on failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input structure: too few vertices, mismatched frame length, non-finite values.
    #[error("structural error: {0}")]
    Structural(String),

    /// A spin label that is negative or not a half-integer.
    #[error("domain error: {0}")]
    Domain(String),

    /// Hyperlink or region failed a validation rule.
    #[error("validation failed: {0}")]
    Validation(String),

    /// Degenerate intersection: collinear overlap, endpoint hit, equal depths, parallel tangents.
    #[error("general position violated: {0}")]
    GeneralPosition(String),

    /// The displaced copy of a framed loop is not a simple curve.
    #[error("regularization failed: {0}")]
    Regularization(String),

    /// Half-twist crossings did not stabilise across the displacement schedule.
    #[error("unstable framing: {0}")]
    UnstableFraming(String),

    /// A half-twist lies on the boundary of a projected region.
    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    /// Tubular neighbourhoods of distinct knots overlap.
    #[error("ambiguous partition: {0}")]
    AmbiguousPartition(String),

    /// Octree subdivision exceeded its cell budget.
    #[error("refinement limit: {0}")]
    Refinement(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// A limit estimate over a kappa schedule is not converging.
    #[error("limit not converging: {0}")]
    Limit(String),

    /// An operation's precondition does not hold for the given scene.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Scene text could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// Filesystem failure.
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Machine-readable category, distinct per variant.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Structural(_) => "structural",
            Error::Domain(_) => "domain",
            Error::Validation(_) => "validation",
            Error::GeneralPosition(_) => "general-position",
            Error::Regularization(_) => "regularization",
            Error::UnstableFraming(_) => "unstable-framing",
            Error::DegenerateRegion(_) => "degenerate-region",
            Error::AmbiguousPartition(_) => "ambiguous-partition",
            Error::Refinement(_) => "refinement",
            Error::Quadrature(_) => "quadrature",
            Error::Limit(_) => "limit",
            Error::Precondition(_) => "precondition",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }

    /// Prefixes the message with `ctx`, keeping the category.
    pub fn context(self, ctx: &str) -> Self {
        let f = |m: String| format!("{ctx}: {m}");
        match self {
            Error::Structural(m) => Error::Structural(f(m)),
            Error::Domain(m) => Error::Domain(f(m)),
            Error::Validation(m) => Error::Validation(f(m)),
            Error::GeneralPosition(m) => Error::GeneralPosition(f(m)),
            Error::Regularization(m) => Error::Regularization(f(m)),
            Error::UnstableFraming(m) => Error::UnstableFraming(f(m)),
            Error::DegenerateRegion(m) => Error::DegenerateRegion(f(m)),
            Error::AmbiguousPartition(m) => Error::AmbiguousPartition(f(m)),
            Error::Refinement(m) => Error::Refinement(f(m)),
            Error::Quadrature(m) => Error::Quadrature(f(m)),
            Error::Limit(m) => Error::Limit(f(m)),
            Error::Precondition(m) => Error::Precondition(f(m)),
            Error::Parse(m) => Error::Parse(f(m)),
            Error::Io(m) => Error::Io(f(m)),
        }
    }

    /// Process exit status used by the command-line tool: 10 plus the category index.
    pub fn exit_code(&self) -> i32 {
        let c = self.category();
        10 + Self::CATEGORIES.iter().position(|x| *x == c).unwrap_or(0) as i32
    }

    /// All category strings, in declaration order.
    pub const CATEGORIES: [&'static str; 14] = [
        "structural",
        "domain",
        "validation",
        "general-position",
        "regularization",
        "unstable-framing",
        "degenerate-region",
        "ambiguous-partition",
        "refinement",
        "quadrature",
        "limit",
        "precondition",
        "parse",
        "io",
    ];
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
