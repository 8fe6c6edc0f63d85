use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("tensor is not traceless (trace = {0:e})")]
    NotTraceless(f64),
    #[error("no physical width σ_⊥ supplied for SI conversion")]
    MissingScale,
    #[error("cannot parse length '{0}' (expected a positive number with unit nm, um or m)")]
    UnitParse(String),

    #[error("syntax error at byte {offset}: expected {}", expected.join(" or "))]
    Syntax { offset: usize, expected: Vec<String> },
    #[error("unbound parameter '{0}'")]
    UnboundParameter(String),
    #[error("phase is singular at p = ({:.3e}, {:.3e}, {:.3e}): {reason}", p[0], p[1], p[2])]
    SingularPoint { p: [f64; 3], reason: &'static str },

    #[error(
        "vortex phase {l}·phi_p on a plain Gaussian envelope: the second moment diverges \
         logarithmically; use the lg_vortex family"
    )]
    VortexDivergence { l: i64 },
    #[error("phase depends on phi_p or p_perp in a way that is not a pure integer vortex; moments are not guaranteed finite")]
    SingularPhase,
    #[error("normalization drift: ∫|ψ|² = {value} (tolerance {tolerance:e})")]
    NormalizationDrift { value: f64, tolerance: f64 },
    #[error("quadrature did not converge: doubling nodes changed {component} by {delta:e} (tolerance {tolerance:e})")]
    QuadratureNonConvergence {
        component: String,
        delta: f64,
        tolerance: f64,
    },
    #[error("odd cat state degenerates for σ|r₀| = {0:e} < 1e-6")]
    DegenerateCat(f64),
    #[error("boost speed |β| = {0} is not below 1")]
    SuperluminalBoost(f64),
    #[error("grid box too small: boundary density / peak = {0:e} exceeds 1e-12")]
    BoxTooSmall(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field evaluated at the origin")]
    OriginSingularity,
    #[error("operation not available: {0}")]
    Unavailable(&'static str),
}
