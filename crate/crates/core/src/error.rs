use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate arrow {0} -> {1}")]
    DuplicateArrow(String, String),
    #[error("vertex index {index} out of range (structure has {len} vertices)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("variable subsets are not pairwise disjoint")]
    SubsetsNotDisjoint,
    #[error("subsets overlap on {0:?}; the conditioning and target sets must be disjoint")]
    OverlappingSubsets(Vec<String>),

    #[error("codomain {codomain} does not match domain {domain}")]
    CodomainMismatch { codomain: String, domain: String },
    #[error("malformed diagram: {0}")]
    MalformedDiagram(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("not a stochastic matrix: {0}")]
    NotStochastic(String),
    #[error("not a probability distribution: {0}")]
    NotADistribution(String),
    #[error("matrix is not deterministic")]
    NotDeterministic,
    #[error("invalid outcome space: {0}")]
    InvalidSpace(String),
    #[error("unknown factor `{0}`")]
    UnknownFactor(String),
    #[error("factor subsets must be disjoint")]
    DisjointnessViolated,

    #[error("model does not match diagram: {0}")]
    ModelMismatch(String),
    #[error("models are over different causal structures")]
    StructureMismatch,
    #[error("joint distribution factors do not match structure: {0}")]
    FactorMismatch(String),
    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),

    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("malformed expression: {0}")]
    Expression(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
