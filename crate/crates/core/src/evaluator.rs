//! Semantics of probability formulas and of the measure a network defines.
//!
//! Everything here is generic over the number type and over the [`World`]
//! that supplies truth values, so the same code serves full structures,
//! partial structures and ground-network parent assignments.

use std::collections::BTreeMap;

use smallvec::SmallVec;
use thiserror::Error;

use crate::combinators::{Multiset, Registry};
use crate::dependency::{check_wellfounded, CycleWitness};
use crate::model::compile::{CTerm, CombNode, Compiler, Cond, Node};
use crate::model::{
    CompiledNetwork, ConstId, Constraint, Elem, Formula, GroundAtom, Interpretation, RelId, Structure,
    ValidationReport, Violation, Vocabulary,
};
use crate::scalar::Scalar;

/// Variable assignment for free variables.
pub type Binding = BTreeMap<String, Elem>;

/// Builds a [`Binding`] from `(variable, element)` pairs.
pub fn binding(pairs: &[(&str, Elem)]) -> Binding {
    pairs.iter().map(|(v, e)| (v.to_string(), *e)).collect()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("no interpretation for `{0}`")]
    MissingInterpretation(String),
    #[error("constant `{0}` is not bound to a domain element")]
    UnboundConstant(String),
    /// A recursive definition read an atom that is not yet determined.
    #[error("{0} is needed before it is determined (definition is not well-founded)")]
    Undetermined(String),
    #[error("recursive definition is not well-founded: {0}")]
    IllFounded(CycleWitness),
    #[error("invalid formula: {0}")]
    Invalid(ValidationReport),
    #[error("expected a combination term")]
    NotACombination,
}

/// Result of a truth-value lookup.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lookup {
    Known(bool),
    Undetermined,
    Uninterpreted,
}

/// Source of truth values for atoms and constants.
pub trait World {
    fn vocabulary(&self) -> &Vocabulary;
    fn domain_size(&self) -> usize;
    fn lookup(&self, rel: RelId, args: &[Elem]) -> Lookup;
    fn constant(&self, c: ConstId) -> Option<Elem>;

    fn element_name(&self, e: Elem) -> String {
        format!("#{e}")
    }

    fn atom_name(&self, rel: RelId, args: &[Elem]) -> String {
        let args: Vec<String> = args.iter().map(|&a| self.element_name(a)).collect();
        format!("{}({})", self.vocabulary().relation_name(rel), args.join(","))
    }
}

impl World for Structure {
    fn vocabulary(&self) -> &Vocabulary {
        Structure::vocabulary(self)
    }

    fn domain_size(&self) -> usize {
        self.domain().len()
    }

    fn lookup(&self, rel: RelId, args: &[Elem]) -> Lookup {
        match self.interpretation(rel) {
            None => Lookup::Uninterpreted,
            Some(i) => match i.get(args) {
                Some(v) => Lookup::Known(v),
                None => Lookup::Undetermined,
            },
        }
    }

    fn constant(&self, c: ConstId) -> Option<Elem> {
        Structure::constant(self, c)
    }

    fn element_name(&self, e: Elem) -> String {
        self.domain().name(e).to_string()
    }
}

type Args = SmallVec<[Elem; 4]>;

fn term_value<W: World + ?Sized>(t: &CTerm, w: &W, env: &[Elem]) -> Result<Elem, EvalError> {
    match t {
        CTerm::Slot(s) => Ok(env[*s]),
        CTerm::Const(c) => w
            .constant(*c)
            .ok_or_else(|| EvalError::UnboundConstant(w.vocabulary().constant_name(*c).to_string())),
    }
}

fn term_values<W: World + ?Sized>(ts: &[CTerm], w: &W, env: &[Elem]) -> Result<Args, EvalError> {
    ts.iter().map(|t| term_value(t, w, env)).collect()
}

fn read_atom<W: World + ?Sized>(w: &W, rel: RelId, args: &[Elem]) -> Result<bool, EvalError> {
    match w.lookup(rel, args) {
        Lookup::Known(v) => Ok(v),
        Lookup::Undetermined => Err(EvalError::Undetermined(w.atom_name(rel, args))),
        Lookup::Uninterpreted => {
            Err(EvalError::MissingInterpretation(w.vocabulary().relation_name(rel).to_string()))
        }
    }
}

pub(crate) fn eval_cond<W: World + ?Sized>(c: &Cond, w: &W, env: &[Elem]) -> Result<bool, EvalError> {
    Ok(match c {
        Cond::True => true,
        Cond::False => false,
        Cond::Eq(a, b) => term_value(a, w, env)? == term_value(b, w, env)?,
        Cond::Rigid(rel, args) => {
            let args = term_values(args, w, env)?;
            read_atom(w, *rel, &args)?
        }
        Cond::Not(c) => !eval_cond(c, w, env)?,
        Cond::And(a, b) => eval_cond(a, w, env)? && eval_cond(b, w, env)?,
        Cond::Or(a, b) => eval_cond(a, w, env)? || eval_cond(b, w, env)?,
    })
}

pub(crate) fn eval_node<S: Scalar, W: World + ?Sized>(
    node: &Node,
    w: &W,
    env: &mut [Elem],
) -> Result<S, EvalError> {
    match node {
        Node::Const(q) => Ok(S::from_rational(q)),
        Node::Indicator(rel, args) => {
            let args = term_values(args, w, env)?;
            Ok(if read_atom(w, *rel, &args)? { S::one() } else { S::zero() })
        }
        Node::Convex(a, b, c) => {
            let weight: S = eval_node(a, w, env)?;
            let hi: S = eval_node(b, w, env)?;
            let lo: S = eval_node(c, w, env)?;
            Ok(weight.clone() * hi + weight.complement() * lo)
        }
        Node::Comb(comb) => {
            let values = comb_multiset(comb, w, env)?;
            Ok(comb.function.apply(&values))
        }
    }
}

/// The multiset of a combination term: one entry per formula and per tuple
/// of the bound variables satisfying the constraint.
pub(crate) fn comb_multiset<S: Scalar, W: World + ?Sized>(
    comb: &CombNode,
    w: &W,
    env: &mut [Elem],
) -> Result<Vec<S>, EvalError> {
    let mut out = Vec::new();
    fill(comb, 0, w, env, &mut out)?;
    Ok(out)
}

fn fill<S: Scalar, W: World + ?Sized>(
    comb: &CombNode,
    j: usize,
    w: &W,
    env: &mut [Elem],
    out: &mut Vec<S>,
) -> Result<(), EvalError> {
    if j == comb.bound {
        if eval_cond(&comb.constraint, w, env)? {
            for arg in &comb.args {
                out.push(eval_node(arg, w, env)?);
            }
        }
        return Ok(());
    }
    let slot = comb.first_slot + j;
    if let Some(t) = &comb.forced[j] {
        env[slot] = term_value(t, w, env)?;
        return fill(comb, j + 1, w, env, out);
    }
    for d in 0..w.domain_size() {
        env[slot] = d;
        fill(comb, j + 1, w, env, out)?;
    }
    Ok(())
}

fn compile_adhoc(vocabulary: &Vocabulary, registry: &Registry, f: &Formula, b: &Binding) -> Result<(Node, Vec<Elem>), EvalError> {
    let vars: Vec<String> = b.keys().cloned().collect();
    let (compiled, _) = Compiler::new(vocabulary, registry, "<formula>")
        .compile(&vars, f)
        .map_err(violations_to_error)?;
    let mut env: Vec<Elem> = b.values().copied().collect();
    env.resize(compiled.slots.max(env.len()), 0);
    Ok((compiled.root, env))
}

fn violations_to_error(vs: Vec<Violation>) -> EvalError {
    for v in &vs {
        if let Violation::StrayFreeVariable { variable, .. } = v {
            return EvalError::UnboundVariable(variable.clone());
        }
    }
    EvalError::Invalid(ValidationReport { violations: vs })
}

/// Truth of a constraint under `b`.
pub fn eval_constraint(c: &Constraint, s: &Structure, b: &Binding) -> Result<bool, EvalError> {
    let vars: Vec<String> = b.keys().cloned().collect();
    let registry = Registry::builtin();
    let cond = Compiler::new(s.vocabulary(), &registry, "<constraint>")
        .compile_constraint(&vars, c)
        .map_err(violations_to_error)?;
    let env: Vec<Elem> = b.values().copied().collect();
    eval_cond(&cond, s, &env)
}

/// Value of `f` under `b`, with the built-in combination functions.
pub fn eval_formula<S: Scalar>(f: &Formula, s: &Structure, b: &Binding) -> Result<S, EvalError> {
    eval_formula_with(f, s, b, &Registry::builtin())
}

pub fn eval_formula_with<S: Scalar>(f: &Formula, s: &Structure, b: &Binding, registry: &Registry) -> Result<S, EvalError> {
    let (root, mut env) = compile_adhoc(s.vocabulary(), registry, f, b)?;
    eval_node(&root, s, &mut env)
}

/// The multiset represented by a combination term under `b`.
pub fn build_multiset<S: Scalar>(
    term: &Formula,
    s: &Structure,
    b: &Binding,
    registry: &Registry,
) -> Result<Multiset<S>, EvalError> {
    if !matches!(term, Formula::Comb { .. }) {
        return Err(EvalError::NotACombination);
    }
    let (root, mut env) = compile_adhoc(s.vocabulary(), registry, term, b)?;
    let Node::Comb(comb) = root else { unreachable!() };
    Ok(Multiset(comb_multiset(&comb, s, &mut env)?))
}

/// `F_r(d)` for the atom `g = r(d)`, read from any [`World`].
pub fn label_value<S: Scalar, W: World + ?Sized>(n: &CompiledNetwork, w: &W, g: &GroundAtom) -> Result<S, EvalError> {
    let formula = n.formula(g.relation);
    let mut env = vec![0; formula.slots.max(g.args.len())];
    env[..g.args.len()].copy_from_slice(&g.args);
    eval_node(&formula.root, w, &mut env)
}

/// Probability that `g` holds given the rest of `s`.
///
/// For a recursive relation `s` may leave some of its atoms undetermined;
/// reading one of those is reported as [`EvalError::Undetermined`].
pub fn atom_probability<S: Scalar>(n: &CompiledNetwork, s: &Structure, g: &GroundAtom) -> Result<S, EvalError> {
    label_value(n, s, g)
}

/// Probability of the interpretation `interp` of `rel` given the
/// interpretations of its parents in `s`.
pub fn interpretation_probability<S: Scalar>(
    n: &CompiledNetwork,
    s: &Structure,
    rel: RelId,
    interp: &Interpretation,
) -> Result<S, EvalError> {
    let mut s = s.clone();
    s.set_interpretation(rel, interp.clone());
    if n.is_recursive(rel) {
        check_wellfounded(n, &s).map_err(EvalError::IllFounded)?;
    }
    Ok(relation_factor::<S>(n, &s, rel, &mut Vec::new())?.value)
}

fn relation_factor<S: Scalar>(
    n: &CompiledNetwork,
    s: &Structure,
    rel: RelId,
    buf: &mut Vec<S>,
) -> Result<crate::scalar::Product<S>, EvalError> {
    buf.clear();
    collect_factors(n, s, rel, buf)?;
    Ok(S::product(buf.drain(..)))
}

fn collect_factors<S: Scalar>(n: &CompiledNetwork, s: &Structure, rel: RelId, out: &mut Vec<S>) -> Result<(), EvalError> {
    let arity = n.vocabulary().arity(rel);
    let size = s.domain().len();
    let interp = s
        .interpretation(rel)
        .ok_or_else(|| EvalError::MissingInterpretation(n.vocabulary().relation_name(rel).to_string()))?;
    let formula = n.formula(rel);
    let mut env = vec![0; formula.slots.max(arity)];
    for rank in 0..interp.len() {
        let tuple = crate::model::tuple_at(rank, arity, size);
        let holds = interp
            .get_rank(rank)
            .ok_or_else(|| EvalError::Undetermined(s.atom_name(rel, &tuple)))?;
        env[..arity].copy_from_slice(&tuple);
        let p: S = eval_node(&formula.root, s, &mut env)?;
        out.push(if holds { p } else { p.complement() });
    }
    Ok(())
}

/// Joint probability with a flag for float underflow.
#[derive(Clone, Debug, PartialEq)]
pub struct JointProbability<S> {
    pub value: S,
    pub underflow: bool,
}

/// Probability of the full structure `s` (all probabilistic relations
/// interpreted) under the measure the network defines on the rigid part of
/// `s`.
pub fn joint_probability<S: Scalar>(n: &CompiledNetwork, s: &Structure) -> Result<S, EvalError> {
    Ok(joint_probability_with_diagnostics(n, s)?.value)
}

pub fn joint_probability_with_diagnostics<S: Scalar>(
    n: &CompiledNetwork,
    s: &Structure,
) -> Result<JointProbability<S>, EvalError> {
    if n.has_recursion() {
        check_wellfounded(n, s).map_err(EvalError::IllFounded)?;
    }
    joint_unchecked(n, s)
}

/// Joint probability without the well-foundedness check; callers
/// enumerating many structures over one rigid part check once up front.
pub(crate) fn joint_unchecked<S: Scalar>(n: &CompiledNetwork, s: &Structure) -> Result<JointProbability<S>, EvalError> {
    let mut factors = Vec::new();
    for &rel in n.topological_order() {
        collect_factors(n, s, rel, &mut factors)?;
    }
    let p = S::product(factors);
    Ok(JointProbability { value: p.value, underflow: p.underflow })
}
