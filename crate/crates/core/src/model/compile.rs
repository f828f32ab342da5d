//! Resolution of surface formulas into slot-indexed trees.
//!
//! Every variable becomes an index into an environment vector. A label's
//! parameters occupy slots `0..arity`; each combination term pushes its
//! bound variables on top, so names resolve innermost-first.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::combinators::{CombinationFunction, Registry};
use crate::scalar::Rational;

use super::formula::{Constraint, Formula, Term};
use super::network::Violation;
use super::vocabulary::{ConstId, RelId, RelationKind, Symbol, Vocabulary};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum CTerm {
    Slot(usize),
    Const(ConstId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Cond {
    True,
    False,
    Eq(CTerm, CTerm),
    Rigid(RelId, Vec<CTerm>),
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

#[derive(Clone, Debug)]
pub(crate) enum Node {
    Const(Rational),
    Indicator(RelId, Vec<CTerm>),
    Convex(Box<Node>, Box<Node>, Box<Node>),
    Comb(Box<CombNode>),
}

#[derive(Clone, Debug)]
pub(crate) struct CombNode {
    pub function: Arc<CombinationFunction>,
    pub args: Vec<Node>,
    /// Slot of the first bound variable; the others follow contiguously.
    pub first_slot: usize,
    pub bound: usize,
    pub constraint: Cond,
    /// For each bound variable, a term it is forced equal to by a top-level
    /// conjunct of the constraint (only terms resolvable before it).
    pub forced: Vec<Option<CTerm>>,
}

/// A formula with all names resolved.
#[derive(Clone, Debug)]
pub struct CompiledFormula {
    pub(crate) root: Node,
    /// Number of slots taken by free variables.
    pub(crate) params: usize,
    /// Environment size needed for evaluation.
    pub(crate) slots: usize,
}

impl CompiledFormula {
    pub fn params(&self) -> usize {
        self.params
    }
}

pub(crate) struct Compiler<'a> {
    vocabulary: &'a Vocabulary,
    registry: &'a Registry,
    owner: String,
    scope: Vec<String>,
    max_slots: usize,
    pub violations: Vec<Violation>,
    pub mentioned: BTreeSet<RelId>,
}

impl<'a> Compiler<'a> {
    pub fn new(vocabulary: &'a Vocabulary, registry: &'a Registry, owner: impl Into<String>) -> Self {
        Compiler {
            vocabulary,
            registry,
            owner: owner.into(),
            scope: Vec::new(),
            max_slots: 0,
            violations: Vec::new(),
            mentioned: BTreeSet::new(),
        }
    }

    /// Compiles `f` with `params` bound to slots `0..params.len()`.
    pub fn compile(mut self, params: &[String], f: &Formula) -> Result<(CompiledFormula, BTreeSet<RelId>), Vec<Violation>> {
        self.scope = params.to_vec();
        self.max_slots = params.len();
        let root = self.formula(f);
        if !self.violations.is_empty() {
            return Err(self.violations);
        }
        let compiled = CompiledFormula { root: root.expect("no violations"), params: params.len(), slots: self.max_slots };
        Ok((compiled, self.mentioned))
    }

    /// Compiles a constraint with `vars` bound to slots `0..vars.len()`.
    pub fn compile_constraint(mut self, vars: &[String], c: &Constraint) -> Result<Cond, Vec<Violation>> {
        self.scope = vars.to_vec();
        self.max_slots = vars.len();
        let out = self.constraint(c);
        if !self.violations.is_empty() {
            return Err(self.violations);
        }
        Ok(out.expect("no violations"))
    }

    fn term(&mut self, t: &Term) -> Option<CTerm> {
        match t {
            Term::Var(v) => match self.scope.iter().rposition(|s| s == v) {
                Some(slot) => Some(CTerm::Slot(slot)),
                None => {
                    self.violations.push(Violation::StrayFreeVariable {
                        relation: self.owner.clone(),
                        variable: v.clone(),
                    });
                    None
                }
            },
            Term::Const(c) => match self.vocabulary.constant_id(c) {
                Some(id) => Some(CTerm::Const(id)),
                None => {
                    self.violations.push(Violation::UnknownConstant {
                        relation: self.owner.clone(),
                        name: c.clone(),
                    });
                    None
                }
            },
        }
    }

    fn terms(&mut self, ts: &[Term]) -> Option<Vec<CTerm>> {
        let out: Vec<Option<CTerm>> = ts.iter().map(|t| self.term(t)).collect();
        out.into_iter().collect()
    }

    fn relation(&mut self, name: &str, arity: usize, kind: RelationKind) -> Option<RelId> {
        let id = match self.vocabulary.lookup(name) {
            Some(Symbol::Relation(id)) => id,
            _ => {
                self.violations.push(Violation::UnknownRelation {
                    relation: self.owner.clone(),
                    symbol: name.to_string(),
                });
                return None;
            }
        };
        let decl = self.vocabulary.relation(id);
        if decl.kind != kind {
            self.violations.push(Violation::WrongSymbolKind {
                relation: self.owner.clone(),
                symbol: name.to_string(),
                expected: kind,
            });
            return None;
        }
        if decl.arity != arity {
            self.violations.push(Violation::ArityMismatch {
                relation: self.owner.clone(),
                symbol: name.to_string(),
                expected: decl.arity,
                found: arity,
            });
            return None;
        }
        Some(id)
    }

    fn formula(&mut self, f: &Formula) -> Option<Node> {
        match f {
            Formula::Const(q) => {
                if !q.is_probability() {
                    self.violations.push(Violation::ConstantOutOfRange {
                        relation: self.owner.clone(),
                        value: q.to_string(),
                    });
                    return None;
                }
                Some(Node::Const(q.clone()))
            }
            Formula::Indicator(r, args) => {
                let rel = self.relation(r, args.len(), RelationKind::Probabilistic);
                let args = self.terms(args);
                let rel = rel?;
                self.mentioned.insert(rel);
                Some(Node::Indicator(rel, args?))
            }
            Formula::Convex(a, b, c) => {
                let (a, b, c) = (self.formula(a), self.formula(b), self.formula(c));
                Some(Node::Convex(Box::new(a?), Box::new(b?), Box::new(c?)))
            }
            Formula::Comb { function, args, bound, constraint } => {
                let func = match self.registry.get(function) {
                    Some(f) => Some(f.clone()),
                    None => {
                        self.violations.push(Violation::UnknownCombinationFunction {
                            relation: self.owner.clone(),
                            name: function.clone(),
                        });
                        None
                    }
                };
                if args.is_empty() {
                    self.violations.push(Violation::EmptyCombination { relation: self.owner.clone() });
                }
                for z in bound {
                    if self.vocabulary.constant_id(z).is_some() {
                        self.violations.push(Violation::BoundConstant {
                            relation: self.owner.clone(),
                            name: z.clone(),
                        });
                    }
                }
                let first_slot = self.scope.len();
                self.scope.extend(bound.iter().cloned());
                self.max_slots = self.max_slots.max(self.scope.len());
                let cond = self.constraint(constraint);
                let compiled: Vec<Option<Node>> = args.iter().map(|a| self.formula(a)).collect();
                self.scope.truncate(first_slot);
                let args: Option<Vec<Node>> = compiled.into_iter().collect();
                let (func, cond, args) = (func?, cond?, args?);
                if args.is_empty() {
                    return None;
                }
                let forced = forced_terms(&cond, first_slot, bound.len());
                Some(Node::Comb(Box::new(CombNode {
                    function: func,
                    args,
                    first_slot,
                    bound: bound.len(),
                    constraint: cond,
                    forced,
                })))
            }
        }
    }

    fn constraint(&mut self, c: &Constraint) -> Option<Cond> {
        match c {
            Constraint::True => Some(Cond::True),
            Constraint::False => Some(Cond::False),
            Constraint::Eq(a, b) => {
                let (a, b) = (self.term(a), self.term(b));
                Some(Cond::Eq(a?, b?))
            }
            Constraint::Rigid(r, args) => {
                let rel = self.relation(r, args.len(), RelationKind::Rigid);
                let args = self.terms(args);
                Some(Cond::Rigid(rel?, args?))
            }
            Constraint::Not(inner) => Some(Cond::Not(Box::new(self.constraint(inner)?))),
            Constraint::And(a, b) => {
                let (a, b) = (self.constraint(a), self.constraint(b));
                Some(Cond::And(Box::new(a?), Box::new(b?)))
            }
            Constraint::Or(a, b) => {
                let (a, b) = (self.constraint(a), self.constraint(b));
                Some(Cond::Or(Box::new(a?), Box::new(b?)))
            }
        }
    }
}

fn conjuncts<'c>(c: &'c Cond, out: &mut Vec<&'c Cond>) {
    match c {
        Cond::And(a, b) => {
            conjuncts(a, out);
            conjuncts(b, out);
        }
        other => out.push(other),
    }
}

/// Finds bound variables pinned by a top-level equality to a term that is
/// already known when the variable is reached.
fn forced_terms(c: &Cond, first_slot: usize, bound: usize) -> Vec<Option<CTerm>> {
    let mut parts = Vec::new();
    conjuncts(c, &mut parts);
    let known_before = |t: &CTerm, slot: usize| match t {
        CTerm::Const(_) => true,
        CTerm::Slot(s) => *s < slot,
    };
    (0..bound)
        .map(|j| {
            let slot = first_slot + j;
            parts.iter().find_map(|p| match p {
                Cond::Eq(CTerm::Slot(s), t) if *s == slot && known_before(t, slot) => Some(t.clone()),
                Cond::Eq(t, CTerm::Slot(s)) if *s == slot && known_before(t, slot) => Some(t.clone()),
                _ => None,
            })
        })
        .collect()
}
