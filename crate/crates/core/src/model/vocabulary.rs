use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Index of a relation symbol (probabilistic or rigid) in its [`Vocabulary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelId(pub usize);

/// Index of a rigid constant symbol in its [`Vocabulary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelationKind {
    /// A node of the network; its interpretation is random.
    Probabilistic,
    /// A fixed relation, only usable inside constraints.
    Rigid,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationDecl {
    pub name: String,
    pub arity: usize,
    pub kind: RelationKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    Relation(RelId),
    Constant(ConstId),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabularyError {
    #[error("symbol `{0}` is declared twice")]
    Duplicate(String),
    #[error("relation `{0}` must have arity at least 1")]
    ZeroArity(String),
    #[error("`{0}` is reserved and cannot be declared")]
    Reserved(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
}

/// Words with a fixed meaning in the model and scenario languages.
pub const RESERVED_WORDS: &[&str] = &[
    "relation",
    "rigid",
    "constant",
    "combfun",
    "cumulative",
    "cc",
    "true",
    "false",
    "domain",
    "bind",
    "evidence",
    "query",
    "exists",
    "forall",
];

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// The probabilistic vocabulary S together with the rigid vocabulary R.
///
/// Equality is built in and is never part of the rigid relations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    relations: Vec<RelationDecl>,
    constants: Vec<String>,
    by_name: HashMap<String, Symbol>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    fn check_name(&self, name: &str) -> Result<(), VocabularyError> {
        if name == "=" {
            return Err(VocabularyError::Reserved(name.to_string()));
        }
        if !is_identifier(name) {
            return Err(VocabularyError::InvalidName(name.to_string()));
        }
        if RESERVED_WORDS.contains(&name) {
            return Err(VocabularyError::Reserved(name.to_string()));
        }
        if self.by_name.contains_key(name) {
            return Err(VocabularyError::Duplicate(name.to_string()));
        }
        Ok(())
    }

    fn declare_relation(
        &mut self,
        name: &str,
        arity: usize,
        kind: RelationKind,
    ) -> Result<RelId, VocabularyError> {
        self.check_name(name)?;
        if arity == 0 {
            return Err(VocabularyError::ZeroArity(name.to_string()));
        }
        let id = RelId(self.relations.len());
        self.relations.push(RelationDecl { name: name.to_string(), arity, kind });
        self.by_name.insert(name.to_string(), Symbol::Relation(id));
        Ok(id)
    }

    pub fn declare_probabilistic(&mut self, name: &str, arity: usize) -> Result<RelId, VocabularyError> {
        self.declare_relation(name, arity, RelationKind::Probabilistic)
    }

    pub fn declare_rigid(&mut self, name: &str, arity: usize) -> Result<RelId, VocabularyError> {
        self.declare_relation(name, arity, RelationKind::Rigid)
    }

    pub fn declare_constant(&mut self, name: &str) -> Result<ConstId, VocabularyError> {
        self.check_name(name)?;
        let id = ConstId(self.constants.len());
        self.constants.push(name.to_string());
        self.by_name.insert(name.to_string(), Symbol::Constant(id));
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<Symbol> {
        self.by_name.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelId> {
        match self.lookup(name) {
            Some(Symbol::Relation(id)) => Some(id),
            _ => None,
        }
    }

    pub fn constant_id(&self, name: &str) -> Option<ConstId> {
        match self.lookup(name) {
            Some(Symbol::Constant(id)) => Some(id),
            _ => None,
        }
    }

    pub fn relation(&self, id: RelId) -> &RelationDecl {
        &self.relations[id.0]
    }

    pub fn relation_name(&self, id: RelId) -> &str {
        &self.relations[id.0].name
    }

    pub fn arity(&self, id: RelId) -> usize {
        self.relations[id.0].arity
    }

    pub fn is_rigid(&self, id: RelId) -> bool {
        self.relations[id.0].kind == RelationKind::Rigid
    }

    pub fn constant_name(&self, id: ConstId) -> &str {
        &self.constants[id.0]
    }

    pub fn relations(&self) -> impl Iterator<Item = (RelId, &RelationDecl)> {
        self.relations.iter().enumerate().map(|(i, d)| (RelId(i), d))
    }

    pub fn probabilistic(&self) -> impl Iterator<Item = RelId> + '_ {
        self.relations()
            .filter(|(_, d)| d.kind == RelationKind::Probabilistic)
            .map(|(id, _)| id)
    }

    pub fn rigid(&self) -> impl Iterator<Item = RelId> + '_ {
        self.relations().filter(|(_, d)| d.kind == RelationKind::Rigid).map(|(id, _)| id)
    }

    pub fn constants(&self) -> impl Iterator<Item = (ConstId, &str)> {
        self.constants.iter().enumerate().map(|(i, n)| (ConstId(i), n.as_str()))
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn constant_count(&self) -> usize {
        self.constants.len()
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationKind::Probabilistic => f.write_str("probabilistic"),
            RelationKind::Rigid => f.write_str("rigid"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_shared_across_kinds() {
        let mut v = Vocabulary::new();
        v.declare_probabilistic("b", 2).unwrap();
        assert_eq!(v.declare_rigid("b", 2), Err(VocabularyError::Duplicate("b".into())));
        assert_eq!(v.declare_constant("b"), Err(VocabularyError::Duplicate("b".into())));
    }

    #[test]
    fn equality_and_keywords_are_reserved() {
        let mut v = Vocabulary::new();
        assert!(matches!(v.declare_rigid("=", 2), Err(VocabularyError::Reserved(_))));
        assert!(matches!(v.declare_rigid("cc", 3), Err(VocabularyError::Reserved(_))));
        assert!(matches!(v.declare_rigid("leq", 0), Err(VocabularyError::ZeroArity(_))));
    }
}
