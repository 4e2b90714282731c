//! Causal theories of directed acyclic causal structures.
//!
//! Build a [`CausalStructure`], construct morphisms of its causal theory as
//! [`Diagram`]s (including the canonical causal conditionals `[w'||w]`), and
//! evaluate them in stochastic, relational or deterministic models.

pub mod demos;
pub mod diagram;
pub mod dot;
pub mod error;
pub mod expr;
pub mod formats;
pub mod model;
pub mod stoch;
pub mod structure;

pub use diagram::{BoxKind, Diagram, TheoryObject};
pub use error::{Error, Result};
pub use expr::Expression;
pub use model::{
    check_compatibility, Compatibility, ModelMorphism, MorphismKind, MorphismVerdict, RelCausalModel, SetCausalModel,
    StochCausalModel,
};
pub use stoch::{BoolMatrix, FinSpace, JointDistribution, Kernel, StochMatrix, TOLERANCE};
pub use structure::{CausalStructure, ReasoningSubgraph, VariableSubset};
