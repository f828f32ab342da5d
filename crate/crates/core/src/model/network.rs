use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::combinators::Registry;
use crate::dependency::DependencyTable;

use super::compile::{CompiledFormula, Compiler};
use super::formula::Formula;
use super::vocabulary::{RelId, RelationKind, Vocabulary};

/// One structural problem found by [`RelationalNetwork::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MissingLabel { relation: String },
    BadParameters { relation: String, reason: String },
    Cycle { path: Vec<String> },
    NonParentSymbol { relation: String, symbol: String },
    UnknownRelation { relation: String, symbol: String },
    WrongSymbolKind { relation: String, symbol: String, expected: RelationKind },
    ArityMismatch { relation: String, symbol: String, expected: usize, found: usize },
    StrayFreeVariable { relation: String, variable: String },
    UnknownConstant { relation: String, name: String },
    BoundConstant { relation: String, name: String },
    UnknownCombinationFunction { relation: String, name: String },
    ConstantOutOfRange { relation: String, value: String },
    EmptyCombination { relation: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingLabel { relation } => write!(f, "{relation}: no probability formula"),
            Violation::BadParameters { relation, reason } => write!(f, "{relation}: {reason}"),
            Violation::Cycle { path } => write!(f, "cycle: {}", path.join(" → ")),
            Violation::NonParentSymbol { relation, symbol } => {
                write!(f, "{relation}: formula mentions non-parent symbol `{symbol}`")
            }
            Violation::UnknownRelation { relation, symbol } => {
                write!(f, "{relation}: unknown relation `{symbol}`")
            }
            Violation::WrongSymbolKind { relation, symbol, expected } => match expected {
                RelationKind::Probabilistic => {
                    write!(f, "{relation}: `{symbol}` is rigid and cannot be used as an indicator")
                }
                RelationKind::Rigid => {
                    write!(f, "{relation}: `{symbol}` is probabilistic and cannot appear in a constraint")
                }
            },
            Violation::ArityMismatch { relation, symbol, expected, found } => {
                write!(f, "{relation}: arity mismatch for `{symbol}` (expected {expected}, found {found})")
            }
            Violation::StrayFreeVariable { relation, variable } => {
                write!(f, "{relation}: stray free variable `{variable}`")
            }
            Violation::UnknownConstant { relation, name } => write!(f, "{relation}: unknown constant `{name}`"),
            Violation::BoundConstant { relation, name } => {
                write!(f, "{relation}: constant `{name}` used as a bound variable")
            }
            Violation::UnknownCombinationFunction { relation, name } => {
                write!(f, "{relation}: unknown combination function `{name}`")
            }
            Violation::ConstantOutOfRange { relation, value } => {
                write!(f, "{relation}: constant {value} is outside [0,1]")
            }
            Violation::EmptyCombination { relation } => {
                write!(f, "{relation}: combination term with no formulas")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Error)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("`{0}` is rigid and has no probability formula")]
    RigidRelation(String),
}

/// The probability formula attached to a relation, with its parameter names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Label {
    pub params: Vec<String>,
    pub formula: Formula,
}

/// A (possibly recursive) relational Bayesian network as written by the
/// user. Nothing is checked on construction; see [`validate`](Self::validate)
/// and [`compile`](Self::compile).
#[derive(Clone, Debug)]
pub struct RelationalNetwork {
    vocabulary: Arc<Vocabulary>,
    registry: Arc<Registry>,
    labels: BTreeMap<RelId, Label>,
    explicit_parents: BTreeMap<RelId, BTreeSet<RelId>>,
}

impl RelationalNetwork {
    pub fn new(vocabulary: Arc<Vocabulary>, registry: Arc<Registry>) -> Self {
        RelationalNetwork { vocabulary, registry, labels: BTreeMap::new(), explicit_parents: BTreeMap::new() }
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocabulary
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    fn probabilistic_id(&self, relation: &str) -> Result<RelId, NetworkError> {
        let id = self
            .vocabulary
            .relation_id(relation)
            .ok_or_else(|| NetworkError::UnknownRelation(relation.to_string()))?;
        if self.vocabulary.is_rigid(id) {
            return Err(NetworkError::RigidRelation(relation.to_string()));
        }
        Ok(id)
    }

    pub fn set_label(&mut self, relation: &str, params: &[&str], formula: Formula) -> Result<(), NetworkError> {
        let id = self.probabilistic_id(relation)?;
        let params = params.iter().map(|p| p.to_string()).collect();
        self.labels.insert(id, Label { params, formula });
        Ok(())
    }

    /// Declares the edge set into `relation` explicitly. Without this the
    /// parents are the relations its formula mentions (other than itself).
    pub fn set_parents(&mut self, relation: &str, parents: &[&str]) -> Result<(), NetworkError> {
        let id = self.probabilistic_id(relation)?;
        let ps = parents.iter().map(|p| self.probabilistic_id(p)).collect::<Result<BTreeSet<_>, _>>()?;
        self.explicit_parents.insert(id, ps);
        Ok(())
    }

    pub fn label(&self, rel: RelId) -> Option<&Label> {
        self.labels.get(&rel)
    }

    pub fn labels(&self) -> impl Iterator<Item = (RelId, &Label)> {
        self.labels.iter().map(|(k, v)| (*k, v))
    }

    fn mentioned(&self, rel: RelId) -> BTreeSet<RelId> {
        self.labels
            .get(&rel)
            .map(|l| {
                l.formula
                    .indicator_relations()
                    .iter()
                    .filter_map(|n| self.vocabulary.relation_id(n))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// `Pa(r)`.
    pub fn parents(&self, rel: RelId) -> BTreeSet<RelId> {
        if let Some(ps) = self.explicit_parents.get(&rel) {
            return ps.clone();
        }
        let mut ps = self.mentioned(rel);
        ps.remove(&rel);
        ps
    }

    /// Whether the formula of `rel` mentions `rel` itself.
    pub fn is_recursive(&self, rel: RelId) -> bool {
        self.mentioned(rel).contains(&rel)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let vocab = &self.vocabulary;
        for rel in vocab.probabilistic() {
            let name = vocab.relation_name(rel).to_string();
            let Some(label) = self.labels.get(&rel) else {
                violations.push(Violation::MissingLabel { relation: name });
                continue;
            };
            let arity = vocab.arity(rel);
            if label.params.len() != arity {
                violations.push(Violation::BadParameters {
                    relation: name.clone(),
                    reason: format!("{} parameters for a relation of arity {arity}", label.params.len()),
                });
            }
            let distinct: BTreeSet<&String> = label.params.iter().collect();
            if distinct.len() != label.params.len() {
                violations.push(Violation::BadParameters {
                    relation: name.clone(),
                    reason: "repeated parameter name".into(),
                });
            }
            for p in &label.params {
                if vocab.constant_id(p).is_some() {
                    violations.push(Violation::BadParameters {
                        relation: name.clone(),
                        reason: format!("parameter `{p}` is a declared constant"),
                    });
                }
            }
            match Compiler::new(vocab, &self.registry, name.clone()).compile(&label.params, &label.formula) {
                Ok((_, mentioned)) => {
                    let parents = self.parents(rel);
                    for m in mentioned {
                        if m != rel && !parents.contains(&m) {
                            violations.push(Violation::NonParentSymbol {
                                relation: name.clone(),
                                symbol: vocab.relation_name(m).to_string(),
                            });
                        }
                    }
                }
                Err(vs) => violations.extend(vs),
            }
        }
        if let Err(path) = self.topological_order() {
            violations.push(Violation::Cycle { path });
        }
        ValidationReport { violations }
    }

    /// Probabilistic relations with parents first, ties broken by
    /// declaration order. On a cycle returns its relation names, with the
    /// first repeated at the end.
    pub fn topological_order(&self) -> Result<Vec<RelId>, Vec<String>> {
        let nodes: Vec<RelId> = self.vocabulary.probabilistic().collect();
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut mark: BTreeMap<RelId, Mark> = nodes.iter().map(|&r| (r, Mark::New)).collect();
        let mut order = Vec::new();
        let mut stack: Vec<RelId> = Vec::new();

        fn visit(
            net: &RelationalNetwork,
            r: RelId,
            mark: &mut BTreeMap<RelId, Mark>,
            stack: &mut Vec<RelId>,
            order: &mut Vec<RelId>,
        ) -> Result<(), Vec<String>> {
            match mark[&r] {
                Mark::Done => return Ok(()),
                Mark::Active => {
                    let start = stack.iter().position(|&s| s == r).unwrap();
                    let mut path: Vec<String> =
                        stack[start..].iter().map(|&s| net.vocabulary.relation_name(s).to_string()).collect();
                    path.push(net.vocabulary.relation_name(r).to_string());
                    return Err(path);
                }
                Mark::New => {}
            }
            mark.insert(r, Mark::Active);
            stack.push(r);
            for p in net.parents(r) {
                if mark.contains_key(&p) {
                    visit(net, p, mark, stack, order)?;
                }
            }
            stack.pop();
            mark.insert(r, Mark::Done);
            order.push(r);
            Ok(())
        }

        for &r in &nodes {
            visit(self, r, &mut mark, &mut stack, &mut order).map_err(|mut path| {
                // The DFS walks child-to-parent; print along the edges instead.
                path.reverse();
                path
            })?;
        }
        Ok(order)
    }

    pub fn compile(self) -> Result<CompiledNetwork, ValidationReport> {
        CompiledNetwork::new(self)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct NodeInfo {
    pub formula: CompiledFormula,
    pub parents: BTreeSet<RelId>,
    pub recursive: bool,
}

/// A validated network with resolved labels, ready for evaluation and
/// inference. Immutable; share it freely across threads.
#[derive(Debug)]
pub struct CompiledNetwork {
    source: RelationalNetwork,
    nodes: Vec<Option<NodeInfo>>,
    order: Vec<RelId>,
    dependencies: OnceLock<DependencyTable>,
}

impl CompiledNetwork {
    fn new(source: RelationalNetwork) -> Result<Self, ValidationReport> {
        let report = source.validate();
        if !report.is_valid() {
            return Err(report);
        }
        let vocab = source.vocabulary.clone();
        let mut nodes = vec![None; vocab.relation_count()];
        for rel in vocab.probabilistic() {
            let label = &source.labels[&rel];
            let (formula, _) = Compiler::new(&vocab, &source.registry, vocab.relation_name(rel))
                .compile(&label.params, &label.formula)
                .map_err(|violations| ValidationReport { violations })?;
            nodes[rel.0] = Some(NodeInfo { formula, parents: source.parents(rel), recursive: source.is_recursive(rel) });
        }
        let order = source.topological_order().expect("validated network is acyclic");
        Ok(CompiledNetwork { source, nodes, order, dependencies: OnceLock::new() })
    }

    pub fn source(&self) -> &RelationalNetwork {
        &self.source
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.source.vocabulary
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.source.registry
    }

    pub(crate) fn node(&self, rel: RelId) -> &NodeInfo {
        self.nodes[rel.0].as_ref().expect("probabilistic relation")
    }

    pub fn parents(&self, rel: RelId) -> &BTreeSet<RelId> {
        &self.node(rel).parents
    }

    pub fn is_recursive(&self, rel: RelId) -> bool {
        self.node(rel).recursive
    }

    pub fn has_recursion(&self) -> bool {
        self.order.iter().any(|&r| self.is_recursive(r))
    }

    pub fn label(&self, rel: RelId) -> &Label {
        &self.source.labels[&rel]
    }

    pub fn formula(&self, rel: RelId) -> &CompiledFormula {
        &self.node(rel).formula
    }

    /// Probabilistic relations, parents before children.
    pub fn topological_order(&self) -> &[RelId] {
        &self.order
    }

    /// Symbolic dependency formulas, computed on first use.
    pub fn dependencies(&self) -> &DependencyTable {
        self.dependencies.get_or_init(|| DependencyTable::new(self))
    }

    /// Relations with a path to `rel` in the symbol graph (excluding `rel`).
    pub fn ancestor_relations(&self, rel: RelId) -> BTreeSet<RelId> {
        let mut out = BTreeSet::new();
        let mut todo: Vec<RelId> = self.parents(rel).iter().copied().collect();
        while let Some(r) = todo.pop() {
            if out.insert(r) {
                todo.extend(self.parents(r).iter().copied());
            }
        }
        out
    }
}
