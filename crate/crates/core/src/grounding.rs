//! Auxiliary ground networks for a query and a set of evidence literals.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::dependency::{check_wellfounded, ground_parents, CycleWitness};
use crate::evaluator::{label_value, EvalError, Lookup, World};
use crate::model::{CompiledNetwork, ConstId, Elem, GroundAtom, RelId, Structure, Vocabulary};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroundingError {
    #[error("{atom} has {found} arguments but `{relation}` has arity {expected}")]
    Arity { atom: String, relation: String, expected: usize, found: usize },
    #[error("element #{element} is outside the domain in {atom}")]
    OutOfDomain { atom: String, element: Elem },
    #[error("`{0}` is rigid; evidence and queries must be probabilistic atoms")]
    RigidAtom(String),
    #[error("{0} occurs both positively and negatively in the evidence")]
    Contradictory(String),
    #[error("recursive definition is not well-founded: {0}")]
    IllFounded(CycleWitness),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Signed ground literals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    literals: BTreeMap<GroundAtom, bool>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a literal; the same atom with the opposite sign is an error.
    pub fn insert(&mut self, atom: GroundAtom, value: bool) -> Result<(), GroundingError> {
        match self.literals.get(&atom) {
            Some(&v) if v != value => Err(GroundingError::Contradictory(format!("{:?}", atom))),
            _ => {
                self.literals.insert(atom, value);
                Ok(())
            }
        }
    }

    pub fn get(&self, atom: &GroundAtom) -> Option<bool> {
        self.literals.get(atom).copied()
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.literals.contains_key(atom)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroundAtom, bool)> {
        self.literals.iter().map(|(a, v)| (a, *v))
    }

    pub fn atoms(&self) -> impl Iterator<Item = &GroundAtom> {
        self.literals.keys()
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// True if every literal agrees with `s`.
    pub fn satisfied_by(&self, s: &Structure) -> bool {
        self.literals.iter().all(|(a, v)| s.atom(a) == Some(*v))
    }
}

impl FromIterator<(GroundAtom, bool)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (GroundAtom, bool)>>(iter: I) -> Self {
        Evidence { literals: iter.into_iter().collect() }
    }
}

/// Checks that `atom` is a well-formed probabilistic atom over `s`.
pub fn check_atom(n: &CompiledNetwork, s: &Structure, atom: &GroundAtom) -> Result<(), GroundingError> {
    let vocab = n.vocabulary();
    let decl = vocab.relation(atom.relation);
    let shown = || s.atom_name(atom.relation, &atom.args);
    if decl.arity != atom.args.len() {
        return Err(GroundingError::Arity {
            atom: shown(),
            relation: decl.name.clone(),
            expected: decl.arity,
            found: atom.args.len(),
        });
    }
    if let Some(&e) = atom.args.iter().find(|&&e| e >= s.domain().len()) {
        return Err(GroundingError::OutOfDomain { atom: format!("{}{:?}", decl.name, atom.args), element: e });
    }
    if vocab.is_rigid(atom.relation) {
        return Err(GroundingError::RigidAtom(decl.name.clone()));
    }
    Ok(())
}

/// Reads probabilistic atoms from an assignment to a node's parents and
/// everything else from the rigid structure.
pub struct AssignmentWorld<'a> {
    base: &'a Structure,
    positions: &'a HashMap<GroundAtom, usize>,
    values: &'a [bool],
}

impl<'a> AssignmentWorld<'a> {
    pub fn new(base: &'a Structure, positions: &'a HashMap<GroundAtom, usize>, values: &'a [bool]) -> Self {
        AssignmentWorld { base, positions, values }
    }
}

impl World for AssignmentWorld<'_> {
    fn vocabulary(&self) -> &Vocabulary {
        self.base.vocabulary()
    }

    fn domain_size(&self) -> usize {
        self.base.domain().len()
    }

    fn lookup(&self, rel: RelId, args: &[Elem]) -> Lookup {
        if self.base.vocabulary().is_rigid(rel) {
            return self.base.lookup(rel, args);
        }
        match self.positions.get(&GroundAtom::new(rel, args.to_vec())) {
            Some(&i) => Lookup::Known(self.values[i]),
            None => Lookup::Undetermined,
        }
    }

    fn constant(&self, c: ConstId) -> Option<Elem> {
        self.base.constant(c)
    }

    fn element_name(&self, e: Elem) -> String {
        self.base.domain().name(e).to_string()
    }
}

#[derive(Clone, Debug)]
pub struct GroundNode {
    pub atom: GroundAtom,
    /// Indices of parent nodes, all smaller than this node's index.
    pub parents: Vec<usize>,
    positions: HashMap<GroundAtom, usize>,
}

/// Ground Bayesian network over boolean atom nodes, in topological order.
pub struct GroundNetwork<'n> {
    network: &'n CompiledNetwork,
    structure: Structure,
    nodes: Vec<GroundNode>,
    index: HashMap<GroundAtom, usize>,
}

impl std::fmt::Debug for GroundNetwork<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroundNetwork").field("nodes", &self.atom_names()).finish()
    }
}

impl<'n> GroundNetwork<'n> {
    pub fn network(&self) -> &'n CompiledNetwork {
        self.network
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn nodes(&self) -> &[GroundNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.parents.len()).sum()
    }

    pub fn index_of(&self, atom: &GroundAtom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.index.contains_key(atom)
    }

    pub fn atoms(&self) -> impl Iterator<Item = &GroundAtom> {
        self.nodes.iter().map(|n| &n.atom)
    }

    pub fn atom_name(&self, i: usize) -> String {
        let a = &self.nodes[i].atom;
        self.structure.atom_name(a.relation, &a.args)
    }

    pub fn atom_names(&self) -> Vec<String> {
        (0..self.nodes.len()).map(|i| self.atom_name(i)).collect()
    }

    /// Probability that node `i` is true given its parents' values (in the
    /// order of [`GroundNode::parents`]).
    pub fn node_probability<S: Scalar>(&self, i: usize, parent_values: &[bool]) -> Result<S, EvalError> {
        let node = &self.nodes[i];
        let world = AssignmentWorld::new(&self.structure, &node.positions, parent_values);
        label_value(self.network, &world, &node.atom)
    }
}

/// Builds the auxiliary network: the query's ancestor closure, plus, for
/// every uninstantiated node that is an ancestor of evidence, the nodes on
/// paths from it to evidence, closed under parents.
pub fn build_auxiliary_network<'n>(
    n: &'n CompiledNetwork,
    s: &Structure,
    e: &Evidence,
    q: &GroundAtom,
) -> Result<GroundNetwork<'n>, GroundingError> {
    check_atom(n, s, q)?;
    for a in e.atoms() {
        check_atom(n, s, a)?;
    }
    if n.has_recursion() {
        check_wellfounded(n, s).map_err(GroundingError::IllFounded)?;
    }
    let base = s.rigid_part();
    let mut parents: BTreeMap<GroundAtom, Vec<GroundAtom>> = BTreeMap::new();
    let parents_of = |a: &GroundAtom, parents: &mut BTreeMap<GroundAtom, Vec<GroundAtom>>| -> Result<(), EvalError> {
        if !parents.contains_key(a) {
            let ps = ground_parents(n, &base, a)?;
            parents.insert(a.clone(), ps);
        }
        Ok(())
    };
    let closure = |roots: Vec<GroundAtom>,
                       into: &mut BTreeSet<GroundAtom>,
                       parents: &mut BTreeMap<GroundAtom, Vec<GroundAtom>>|
     -> Result<Vec<GroundAtom>, EvalError> {
        let mut added = Vec::new();
        let mut todo = roots;
        while let Some(a) = todo.pop() {
            if into.insert(a.clone()) {
                parents_of(&a, parents)?;
                todo.extend(parents[&a].iter().cloned());
                added.push(a);
            }
        }
        Ok(added)
    };

    // Evidence atoms and their ancestors, with child links inside that set.
    let mut upstream = BTreeSet::new();
    closure(e.atoms().cloned().collect(), &mut upstream, &mut parents)?;
    let mut children: BTreeMap<GroundAtom, Vec<GroundAtom>> = BTreeMap::new();
    for a in &upstream {
        for p in &parents[a] {
            children.entry(p.clone()).or_default().push(a.clone());
        }
    }

    let mut included = BTreeSet::new();
    let mut frontier = closure(vec![q.clone()], &mut included, &mut parents)?;
    while !frontier.is_empty() {
        let mut roots = Vec::new();
        for v in &frontier {
            if e.contains(v) || !upstream.contains(v) {
                continue;
            }
            let mut seen: BTreeSet<&GroundAtom> = BTreeSet::new();
            let mut todo = vec![v];
            while let Some(a) = todo.pop() {
                if seen.insert(a) {
                    if let Some(cs) = children.get(a) {
                        todo.extend(cs.iter());
                    }
                }
            }
            roots.extend(seen.into_iter().filter(|a| !included.contains(*a)).cloned());
        }
        frontier = closure(roots, &mut included, &mut parents)?;
    }

    Ok(assemble(n, base, &included, &parents))
}

/// The evidence atoms and all their ancestors: enough to compute `P(e)`.
pub fn build_evidence_network<'n>(
    n: &'n CompiledNetwork,
    s: &Structure,
    e: &Evidence,
) -> Result<GroundNetwork<'n>, GroundingError> {
    for a in e.atoms() {
        check_atom(n, s, a)?;
    }
    if n.has_recursion() {
        check_wellfounded(n, s).map_err(GroundingError::IllFounded)?;
    }
    let base = s.rigid_part();
    let mut parents: BTreeMap<GroundAtom, Vec<GroundAtom>> = BTreeMap::new();
    let mut included = BTreeSet::new();
    let mut todo: Vec<GroundAtom> = e.atoms().cloned().collect();
    while let Some(a) = todo.pop() {
        if included.insert(a.clone()) {
            let ps = ground_parents(n, &base, &a)?;
            todo.extend(ps.iter().cloned());
            parents.insert(a, ps);
        }
    }
    Ok(assemble(n, base, &included, &parents))
}

fn assemble<'n>(
    n: &'n CompiledNetwork,
    base: Structure,
    included: &BTreeSet<GroundAtom>,
    parents: &BTreeMap<GroundAtom, Vec<GroundAtom>>,
) -> GroundNetwork<'n> {
    // Topological order by depth-first post-order over parents.
    let mut order: Vec<GroundAtom> = Vec::with_capacity(included.len());
    let mut placed: BTreeSet<&GroundAtom> = BTreeSet::new();
    for root in included {
        let mut stack: Vec<(&GroundAtom, usize)> = vec![(root, 0)];
        while let Some((a, next)) = stack.pop() {
            if placed.contains(a) {
                continue;
            }
            let ps = &parents[a];
            if next < ps.len() {
                stack.push((a, next + 1));
                if !placed.contains(&ps[next]) {
                    stack.push((&ps[next], 0));
                }
            } else {
                placed.insert(a);
                order.push(a.clone());
            }
        }
    }
    let index: HashMap<GroundAtom, usize> = order.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
    let nodes = order
        .iter()
        .map(|a| {
            let ps = &parents[a];
            GroundNode {
                atom: a.clone(),
                parents: ps.iter().map(|p| index[p]).collect(),
                positions: ps.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect(),
            }
        })
        .collect();
    GroundNetwork { network: n, structure: base, nodes, index }
}
