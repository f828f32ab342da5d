//! Relational Bayesian networks: probability formulas over relational
//! vocabularies, symbolic dependency analysis, grounding and exact
//! inference.

pub mod combinators;
pub mod corpus;
pub mod dependency;
pub mod evaluator;
pub mod fol;
pub mod frontend;
pub mod grounding;
pub mod inference;
pub mod model;
pub mod oracle;
pub mod scalar;

pub use combinators::{CombinationFunction, CumulativeTable, Multiset, Registry, RegistryError, Rule};
pub use evaluator::{Binding, EvalError, World};
pub use grounding::{build_auxiliary_network, build_evidence_network, Evidence, GroundNetwork, GroundingError};
pub use inference::{evidence_probability, infer, infer_with, variable_elimination, ElimOrder, Factor, InferenceError, InferenceOptions, InferenceResult};
pub use oracle::{brute_force_conditional, brute_force_joint, JointTable};
pub use model::*;
pub use scalar::{format_probability, Rational, Scalar};

/// Default floating-point probability type.
pub type Probability = f64;
/// Exact rational probabilities.
pub type Exact = num::BigRational;
