//! Vocabularies, formulas, structures and networks.

pub(crate) mod compile;
pub mod formula;
pub mod network;
pub mod structure;
pub mod vocabulary;

pub use compile::CompiledFormula;
pub use formula::{Constraint, Formula, Term};
pub use network::{CompiledNetwork, Label, NetworkError, RelationalNetwork, ValidationReport, Violation};
pub use structure::{all_tuples, tuple_at, tuple_rank, Domain, Elem, GroundAtom, Interpretation, Structure, StructureError};
pub use vocabulary::{ConstId, RelId, RelationDecl, RelationKind, Symbol, Vocabulary, VocabularyError};

/// `free_vars` as a free function.
pub fn free_vars(f: &Formula) -> std::collections::BTreeSet<String> {
    f.free_vars()
}

/// `validate_network` as a free function.
pub fn validate_network(n: &RelationalNetwork) -> ValidationReport {
    n.validate()
}
