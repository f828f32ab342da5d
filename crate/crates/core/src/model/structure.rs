use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::vocabulary::{ConstId, RelId, Vocabulary};

/// A domain element, as an index into its [`Domain`].
pub type Elem = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("element `{0}` appears twice in the domain")]
    DuplicateElement(String),
    #[error("unknown domain element `{0}`")]
    UnknownElement(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{relation}` has arity {expected}, got a tuple of length {found}")]
    Arity { relation: String, expected: usize, found: usize },
    #[error("element index {0} is outside the domain")]
    OutOfDomain(usize),
}

/// A finite, ordered set of named elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    names: Vec<String>,
    index: HashMap<String, Elem>,
}

impl Domain {
    pub fn new<I, S>(names: I) -> Result<Self, StructureError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Domain { names: Vec::new(), index: HashMap::new() };
        for n in names {
            let n = n.into();
            if out.index.contains_key(&n) {
                return Err(StructureError::DuplicateElement(n));
            }
            out.index.insert(n.clone(), out.names.len());
            out.names.push(n);
        }
        Ok(out)
    }

    /// Elements named `prefix1 .. prefixN`.
    pub fn numbered(prefix: &str, n: usize) -> Self {
        Domain::new((1..=n).map(|i| format!("{prefix}{i}"))).expect("distinct names")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, e: Elem) -> &str {
        &self.names[e]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn element(&self, name: &str) -> Option<Elem> {
        self.index.get(name).copied()
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        0..self.names.len()
    }
}

/// Rank of a tuple in the lexicographic enumeration of `D^k`.
pub fn tuple_rank(args: &[Elem], domain_size: usize) -> usize {
    args.iter().fold(0, |acc, &a| acc * domain_size + a)
}

/// Inverse of [`tuple_rank`].
pub fn tuple_at(mut rank: usize, arity: usize, domain_size: usize) -> Vec<Elem> {
    let mut out = vec![0; arity];
    for slot in out.iter_mut().rev() {
        *slot = rank % domain_size;
        rank /= domain_size;
    }
    out
}

/// All tuples of `D^arity` in lexicographic order.
pub fn all_tuples(arity: usize, domain_size: usize) -> impl Iterator<Item = Vec<Elem>> {
    let count = domain_size.pow(arity as u32);
    (0..count).map(move |r| tuple_at(r, arity, domain_size))
}

const FALSE: u8 = 0;
const TRUE: u8 = 1;
const UNKNOWN: u8 = 2;

/// Truth values of one relation over `D^arity`. Cells may be undetermined,
/// which is how partially built structures are represented.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interpretation {
    arity: usize,
    domain_size: usize,
    cells: Vec<u8>,
}

impl Interpretation {
    pub fn empty(arity: usize, domain_size: usize) -> Self {
        Self::filled(arity, domain_size, FALSE)
    }

    pub fn unknown(arity: usize, domain_size: usize) -> Self {
        Self::filled(arity, domain_size, UNKNOWN)
    }

    fn filled(arity: usize, domain_size: usize, cell: u8) -> Self {
        Interpretation { arity, domain_size, cells: vec![cell; domain_size.pow(arity as u32)] }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `Some(truth)` if determined.
    pub fn get(&self, args: &[Elem]) -> Option<bool> {
        self.get_rank(tuple_rank(args, self.domain_size))
    }

    pub fn get_rank(&self, rank: usize) -> Option<bool> {
        match self.cells[rank] {
            FALSE => Some(false),
            TRUE => Some(true),
            _ => None,
        }
    }

    pub fn set(&mut self, args: &[Elem], value: bool) {
        let r = tuple_rank(args, self.domain_size);
        self.set_rank(r, value);
    }

    pub fn set_rank(&mut self, rank: usize, value: bool) {
        self.cells[rank] = if value { TRUE } else { FALSE };
    }

    pub fn forget(&mut self, args: &[Elem]) {
        let r = tuple_rank(args, self.domain_size);
        self.cells[r] = UNKNOWN;
    }

    /// Tuples known to be in the relation.
    pub fn tuples(&self) -> Vec<Vec<Elem>> {
        (0..self.cells.len())
            .filter(|&r| self.cells[r] == TRUE)
            .map(|r| tuple_at(r, self.arity, self.domain_size))
            .collect()
    }

    pub fn is_total(&self) -> bool {
        self.cells.iter().all(|&c| c != UNKNOWN)
    }
}

/// A ground atom `r(d1, ..., dk)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub relation: RelId,
    pub args: Vec<Elem>,
}

impl GroundAtom {
    pub fn new(relation: RelId, args: Vec<Elem>) -> Self {
        GroundAtom { relation, args }
    }

    /// Resolves `r` and element names.
    pub fn parse_parts(
        vocabulary: &Vocabulary,
        domain: &Domain,
        relation: &str,
        args: &[&str],
    ) -> Result<Self, StructureError> {
        let rel = vocabulary
            .relation_id(relation)
            .ok_or_else(|| StructureError::UnknownSymbol(relation.to_string()))?;
        let arity = vocabulary.arity(rel);
        if arity != args.len() {
            return Err(StructureError::Arity {
                relation: relation.to_string(),
                expected: arity,
                found: args.len(),
            });
        }
        let args = args
            .iter()
            .map(|a| domain.element(a).ok_or_else(|| StructureError::UnknownElement(a.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GroundAtom::new(rel, args))
    }

    pub fn display<'a>(&'a self, vocabulary: &'a Vocabulary, domain: &'a Domain) -> AtomDisplay<'a> {
        AtomDisplay { atom: self, vocabulary, domain }
    }
}

pub struct AtomDisplay<'a> {
    atom: &'a GroundAtom,
    vocabulary: &'a Vocabulary,
    domain: &'a Domain,
}

impl fmt::Display for AtomDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.vocabulary.relation_name(self.atom.relation))?;
        for (i, a) in self.atom.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(self.domain.name(*a))?;
        }
        f.write_str(")")
    }
}

/// A finite structure: a domain with interpretations for some of the
/// vocabulary's relations and constants. Symbols without an interpretation
/// are simply absent; operations say which ones they need.
#[derive(Clone, Debug)]
pub struct Structure {
    vocabulary: Arc<Vocabulary>,
    domain: Arc<Domain>,
    relations: Vec<Option<Interpretation>>,
    constants: Vec<Option<Elem>>,
}

impl Structure {
    pub fn new(vocabulary: Arc<Vocabulary>, domain: Arc<Domain>) -> Self {
        let relations = vec![None; vocabulary.relation_count()];
        let constants = vec![None; vocabulary.constant_count()];
        Structure { vocabulary, domain, relations, constants }
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocabulary
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn interpretation(&self, rel: RelId) -> Option<&Interpretation> {
        self.relations[rel.0].as_ref()
    }

    pub fn interpretation_mut(&mut self, rel: RelId) -> Option<&mut Interpretation> {
        self.relations[rel.0].as_mut()
    }

    /// Interprets `rel` as the empty relation (replacing any previous
    /// interpretation).
    pub fn interpret_empty(&mut self, rel: RelId) -> &mut Interpretation {
        let arity = self.vocabulary.arity(rel);
        self.relations[rel.0] = Some(Interpretation::empty(arity, self.domain.len()));
        self.relations[rel.0].as_mut().unwrap()
    }

    /// Interprets `rel` with every atom undetermined.
    pub fn interpret_unknown(&mut self, rel: RelId) -> &mut Interpretation {
        let arity = self.vocabulary.arity(rel);
        self.relations[rel.0] = Some(Interpretation::unknown(arity, self.domain.len()));
        self.relations[rel.0].as_mut().unwrap()
    }

    pub fn set_interpretation(&mut self, rel: RelId, interp: Interpretation) {
        assert_eq!(interp.arity(), self.vocabulary.arity(rel));
        self.relations[rel.0] = Some(interp);
    }

    pub fn clear_interpretation(&mut self, rel: RelId) {
        self.relations[rel.0] = None;
    }

    pub fn is_interpreted(&self, rel: RelId) -> bool {
        self.relations[rel.0].is_some()
    }

    /// Sets one atom, creating an empty interpretation first if needed.
    pub fn set_atom(&mut self, atom: &GroundAtom, value: bool) {
        if self.relations[atom.relation.0].is_none() {
            self.interpret_empty(atom.relation);
        }
        self.relations[atom.relation.0].as_mut().unwrap().set(&atom.args, value);
    }

    /// `None` if the relation is uninterpreted or the atom undetermined.
    pub fn atom(&self, atom: &GroundAtom) -> Option<bool> {
        self.holds(atom.relation, &atom.args)
    }

    pub fn holds(&self, rel: RelId, args: &[Elem]) -> Option<bool> {
        self.relations[rel.0].as_ref().and_then(|i| i.get(args))
    }

    pub fn bind_constant(&mut self, c: ConstId, e: Elem) {
        self.constants[c.0] = Some(e);
    }

    pub fn constant(&self, c: ConstId) -> Option<Elem> {
        self.constants[c.0]
    }

    /// Adds `tuple` (given by element names) to relation `name`.
    pub fn insert(&mut self, name: &str, tuple: &[&str]) -> Result<(), StructureError> {
        let atom = GroundAtom::parse_parts(&self.vocabulary, &self.domain, name, tuple)?;
        self.set_atom(&atom, true);
        Ok(())
    }

    pub fn bind(&mut self, constant: &str, element: &str) -> Result<(), StructureError> {
        let c = self
            .vocabulary
            .constant_id(constant)
            .ok_or_else(|| StructureError::UnknownSymbol(constant.to_string()))?;
        let e = self
            .domain
            .element(element)
            .ok_or_else(|| StructureError::UnknownElement(element.to_string()))?;
        self.bind_constant(c, e);
        Ok(())
    }

    /// Copy keeping only the rigid part (rigid relations and constants).
    pub fn rigid_part(&self) -> Structure {
        let mut out = Structure::new(self.vocabulary.clone(), self.domain.clone());
        for r in self.vocabulary.rigid() {
            out.relations[r.0] = self.relations[r.0].clone();
        }
        out.constants = self.constants.clone();
        out
    }
}
