use thiserror::Error;

/// Failure modes of the geometric, static and dynamic models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A parameter violates one of its documented invariants. `invariant` is a
    /// stable, machine-readable name for the violated rule.
    #[error("invalid parameter ({invariant}): {detail}")]
    Invalid {
        invariant: &'static str,
        detail: String,
    },

    /// Square root or similar evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// The arms cannot reach the requested pose (arcsine argument outside [-1, 1]).
    #[error("unreachable configuration: {0}")]
    Unreachable(String),

    #[error("singular configuration: {0}")]
    Singular(String),

    /// A normal force came out negative where a compressive contact is required.
    #[error("contact separation: {0}")]
    ContactSeparation(String),

    #[error("no crossing: {0}")]
    NoCrossing(String),

    #[error("unachievable target: {0}")]
    Unachievable(String),

    #[error("no feasible point: {0}")]
    NoFeasiblePoint(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),
}

impl ModelError {
    pub(crate) fn invalid(invariant: &'static str, detail: impl Into<String>) -> Self {
        ModelError::Invalid {
            invariant,
            detail: detail.into(),
        }
    }

    /// Short category name used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            ModelError::Invalid { .. } => "validation",
            ModelError::Domain(_) => "domain",
            ModelError::InvalidGeometry(_) => "invalid-geometry",
            ModelError::Unreachable(_) => "unreachable",
            ModelError::Singular(_) => "singular",
            ModelError::ContactSeparation(_) => "contact-separation",
            ModelError::NoCrossing(_) => "no-crossing",
            ModelError::Unachievable(_) => "unachievable",
            ModelError::NoFeasiblePoint(_) => "no-feasible-point",
            ModelError::NonFinite(_) => "non-finite",
        }
    }

    pub fn is_validation(&self) -> bool {
        matches!(self, ModelError::Invalid { .. })
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
