//! Symbolic dependency analysis.
//!
//! `pa_{r,r'}(x̄, ȳ)` holds when the value of `r(x̄)` may depend on the
//! truth of `r'(ȳ)`. The formulas are derived from the labels by
//! structural induction and cached per network in a [`DependencyTable`].

mod formula;
mod normal;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use formula::{Conjunction, DTerm, DVar, DependencyFormula, FormulaDisplay, Literal, VarNames};
pub use normal::{normalize, pattern_of, patterns, CardinalityNormalForm, NormalFormDisplay, Pattern};

use crate::evaluator::{EvalError, World};
use crate::model::compile::{CTerm, Cond, Node};
use crate::model::{all_tuples, CompiledNetwork, Elem, GroundAtom, RelId, Structure};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DependencyError {
    #[error("`{parent}` is not a parent of `{relation}`")]
    NotALabelSymbol { relation: String, parent: String },
    #[error("closed-form ancestor formulas need a non-recursive network; iterate on a structure instead")]
    Recursive,
    #[error("cannot normalize: {0}")]
    NotNormalizable(String),
    #[error("recursive definition is not well-founded: {0}")]
    IllFounded(CycleWitness),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A cycle in the ground dependency graph; the first atom is repeated at
/// the end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleWitness {
    pub atoms: Vec<GroundAtom>,
    pub names: Vec<String>,
}

impl fmt::Display for CycleWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names.join(" → "))
    }
}

fn cterm(t: &CTerm, env: &[DTerm]) -> DTerm {
    match t {
        CTerm::Slot(s) => env[*s].clone(),
        CTerm::Const(c) => DTerm::Const(*c),
    }
}

/// Disjunctive normal form of a (possibly negated) constraint.
fn cond_dnf(c: &Cond, positive: bool, env: &[DTerm]) -> Vec<Conjunction> {
    match (c, positive) {
        (Cond::True, true) | (Cond::False, false) => vec![Conjunction::truth()],
        (Cond::True, false) | (Cond::False, true) => Vec::new(),
        (Cond::Eq(a, b), p) => vec![Conjunction::new(vec![Literal::Eq(cterm(a, env), cterm(b, env), p)])],
        (Cond::Rigid(r, args), p) => {
            vec![Conjunction::new(vec![Literal::Rigid(*r, args.iter().map(|t| cterm(t, env)).collect(), p)])]
        }
        (Cond::Not(inner), p) => cond_dnf(inner, !p, env),
        (Cond::And(a, b), true) | (Cond::Or(a, b), false) => {
            let (da, db) = (cond_dnf(a, positive, env), cond_dnf(b, positive, env));
            da.iter().flat_map(|x| db.iter().map(move |y| x.and(y))).collect()
        }
        (Cond::Or(a, b), true) | (Cond::And(a, b), false) => {
            let mut out = cond_dnf(a, positive, env);
            out.extend(cond_dnf(b, positive, env));
            out
        }
    }
}

/// Auxiliary variables bound by enclosing combination terms.
fn open_aux(env: &[DTerm]) -> BTreeSet<usize> {
    env.iter()
        .filter_map(|t| match t {
            DTerm::Var(DVar::Z(k)) => Some(*k),
            _ => None,
        })
        .collect()
}

fn prune_scoped(ds: Vec<Conjunction>, env: &[DTerm]) -> Vec<Conjunction> {
    let open = open_aux(env);
    formula::prune_disjuncts(ds.iter().filter_map(|c| c.simplify_scoped(&open)).collect())
}

fn node_formula(node: &Node, target: RelId, env: &mut Vec<DTerm>, next_aux: &mut usize) -> Vec<Conjunction> {
    match node {
        Node::Const(_) => Vec::new(),
        Node::Indicator(rel, args) => {
            if *rel != target {
                return Vec::new();
            }
            let lits = args
                .iter()
                .enumerate()
                .map(|(j, t)| Literal::Eq(DTerm::Var(DVar::Y(j)), cterm(t, env), true))
                .collect();
            vec![Conjunction::new(lits)]
        }
        Node::Convex(a, b, c) => {
            let mut ds = node_formula(a, target, env, next_aux);
            ds.extend(node_formula(b, target, env, next_aux));
            ds.extend(node_formula(c, target, env, next_aux));
            prune_scoped(ds, env)
        }
        Node::Comb(comb) => {
            debug_assert_eq!(env.len(), comb.first_slot);
            for _ in 0..comb.bound {
                env.push(DTerm::Var(DVar::Z(*next_aux)));
                *next_aux += 1;
            }
            let mut inner = Vec::new();
            for arg in &comb.args {
                inner.extend(node_formula(arg, target, env, next_aux));
            }
            let inner = prune_scoped(inner, env);
            let mut out = Vec::new();
            if !inner.is_empty() {
                let cond = cond_dnf(&comb.constraint, true, env);
                for a in &inner {
                    for b in &cond {
                        out.push(a.and(b));
                    }
                }
            }
            env.truncate(comb.first_slot);
            prune_scoped(out, env)
        }
    }
}

/// `pa_{r,r'}` by structural induction on the label of `r`, with no
/// precondition on `r'` (relations not read give ε).
pub fn structural_formula(n: &CompiledNetwork, r: RelId, r2: RelId) -> DependencyFormula {
    let vocab = n.vocabulary();
    let (x, y) = (vocab.arity(r), vocab.arity(r2));
    let compiled = n.formula(r);
    let mut env: Vec<DTerm> = (0..x).map(|i| DTerm::Var(DVar::X(i))).collect();
    let mut next_aux = 0;
    let ds = node_formula(&compiled.root, r2, &mut env, &mut next_aux);
    DependencyFormula::from_disjuncts(x, y, ds)
}

/// `pa_{r,r'}` for `r' ∈ Pa(r) ∪ {r}`.
pub fn parent_formula(n: &CompiledNetwork, r: RelId, r2: RelId) -> Result<DependencyFormula, DependencyError> {
    if r != r2 && !n.parents(r).contains(&r2) {
        let vocab = n.vocabulary();
        return Err(DependencyError::NotALabelSymbol {
            relation: vocab.relation_name(r).to_string(),
            parent: vocab.relation_name(r2).to_string(),
        });
    }
    Ok(n.dependencies().formula(r, r2).clone())
}

/// Disjunction of path compositions over every symbol path from `r2` up to
/// `r`.
pub fn ancestor_formula(n: &CompiledNetwork, r: RelId, r2: RelId) -> Result<DependencyFormula, DependencyError> {
    if n.has_recursion() {
        return Err(DependencyError::Recursive);
    }
    let table = n.dependencies();
    let mut memo: BTreeMap<RelId, DependencyFormula> = BTreeMap::new();
    fn go(
        n: &CompiledNetwork,
        table: &DependencyTable,
        r: RelId,
        target: RelId,
        memo: &mut BTreeMap<RelId, DependencyFormula>,
    ) -> DependencyFormula {
        if let Some(f) = memo.get(&r) {
            return f.clone();
        }
        let vocab = n.vocabulary();
        let mut out = DependencyFormula::epsilon(vocab.arity(r), vocab.arity(target));
        for &p in n.parents(r) {
            let step = table.formula(r, p);
            if step.is_epsilon() {
                continue;
            }
            if p == target {
                out = out.or(step);
            } else if n.ancestor_relations(p).contains(&target) {
                let rest = go(n, table, p, target, memo);
                out = out.or(&step.compose(&rest));
            }
        }
        memo.insert(r, out.clone());
        out
    }
    Ok(go(n, table, r, r2, &mut memo))
}

/// Satisfaction of `d` at `(xs, ys)` with quantifiers ranging over the
/// domain of `w`.
pub fn eval_dependency<W: World + ?Sized>(d: &DependencyFormula, w: &W, xs: &[Elem], ys: &[Elem]) -> Result<bool, EvalError> {
    d.holds(w, xs, ys)
}

/// Cached `pa_{r,r'}` for every probabilistic pair, with normal forms where
/// the formula is over pure equality.
#[derive(Debug)]
pub struct DependencyTable {
    formulas: BTreeMap<(RelId, RelId), DependencyFormula>,
    normal: BTreeMap<(RelId, RelId), CardinalityNormalForm>,
}

impl DependencyTable {
    pub fn new(n: &CompiledNetwork) -> Self {
        let mut formulas = BTreeMap::new();
        let mut normal = BTreeMap::new();
        for &r in n.topological_order() {
            let mut targets: BTreeSet<RelId> = n.parents(r).clone();
            targets.insert(r);
            for r2 in targets {
                let f = structural_formula(n, r, r2);
                if let Ok(nf) = normalize(&f) {
                    normal.insert((r, r2), nf);
                }
                formulas.insert((r, r2), f);
            }
        }
        DependencyTable { formulas, normal }
    }

    /// `pa_{r,r'}`; ε for pairs outside `Pa(r) ∪ {r}`.
    pub fn formula(&self, r: RelId, r2: RelId) -> &DependencyFormula {
        static EMPTY: std::sync::OnceLock<DependencyFormula> = std::sync::OnceLock::new();
        self.formulas.get(&(r, r2)).unwrap_or_else(|| EMPTY.get_or_init(|| DependencyFormula::epsilon(0, 0)))
    }

    pub fn normal_form(&self, r: RelId, r2: RelId) -> Option<&CardinalityNormalForm> {
        self.normal.get(&(r, r2))
    }

    pub fn holds<W: World + ?Sized>(&self, r: RelId, r2: RelId, w: &W, xs: &[Elem], ys: &[Elem]) -> Result<bool, EvalError> {
        if let Some(nf) = self.normal.get(&(r, r2)) {
            return Ok(nf.holds(xs, ys, w.domain_size()));
        }
        match self.formulas.get(&(r, r2)) {
            Some(f) => f.holds(w, xs, ys),
            None => Ok(false),
        }
    }
}

/// Parents of `g` in the ground dependency graph over `w`.
pub fn ground_parents<W: World + ?Sized>(n: &CompiledNetwork, w: &W, g: &GroundAtom) -> Result<Vec<GroundAtom>, EvalError> {
    let table = n.dependencies();
    let vocab = n.vocabulary();
    let mut targets: Vec<RelId> = n.parents(g.relation).iter().copied().collect();
    if n.is_recursive(g.relation) {
        targets.push(g.relation);
    }
    let mut out = Vec::new();
    for r2 in targets {
        if table.formula(g.relation, r2).is_epsilon() {
            continue;
        }
        for ys in all_tuples(vocab.arity(r2), w.domain_size()) {
            if table.holds(g.relation, r2, w, &g.args, &ys)? {
                out.push(GroundAtom::new(r2, ys));
            }
        }
    }
    Ok(out)
}

fn witness<W: World + ?Sized>(w: &W, cycle: Vec<GroundAtom>) -> CycleWitness {
    let names = cycle.iter().map(|a| w.atom_name(a.relation, &a.args)).collect();
    CycleWitness { atoms: cycle, names }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    Active,
    Done,
}

/// Depth-first traversal over the parent relation given by `parents`,
/// reporting the first cycle met.
fn traverse<W, F>(
    w: &W,
    roots: impl IntoIterator<Item = GroundAtom>,
    marks: &mut BTreeMap<GroundAtom, Mark>,
    mut parents: F,
) -> Result<(), DependencyError>
where
    W: World + ?Sized,
    F: FnMut(&GroundAtom) -> Result<Vec<GroundAtom>, EvalError>,
{
    for root in roots {
        if marks.contains_key(&root) {
            continue;
        }
        let mut stack: Vec<(GroundAtom, Vec<GroundAtom>)> = Vec::new();
        let ps = parents(&root)?;
        marks.insert(root.clone(), Mark::Active);
        stack.push((root, ps));
        while let Some((_, pending)) = stack.last_mut() {
            match pending.pop() {
                Some(p) => match marks.get(&p) {
                    Some(Mark::Done) => {}
                    Some(Mark::Active) => {
                        let start = stack.iter().position(|(a, _)| *a == p).expect("active atom on stack");
                        let mut cycle: Vec<GroundAtom> = stack[start..].iter().map(|(a, _)| a.clone()).collect();
                        cycle.push(p);
                        return Err(DependencyError::IllFounded(witness(w, cycle)));
                    }
                    None => {
                        let ps = parents(&p)?;
                        marks.insert(p.clone(), Mark::Active);
                        stack.push((p, ps));
                    }
                },
                None => {
                    let (done, _) = stack.pop().expect("non-empty");
                    marks.insert(done, Mark::Done);
                }
            }
        }
    }
    Ok(())
}

/// Exact ancestor set of `g` (excluding `g`) in the ground dependency graph
/// over `s`.
pub fn ancestor_closure_on_structure(
    n: &CompiledNetwork,
    s: &Structure,
    g: &GroundAtom,
) -> Result<BTreeSet<GroundAtom>, DependencyError> {
    let mut marks = BTreeMap::new();
    traverse(s, [g.clone()], &mut marks, |a| ground_parents(n, s, a))?;
    Ok(marks.into_keys().filter(|a| a != g).collect())
}

/// Checks that `{(d̄, d̄') : pa_{r,r}(d̄, d̄')}` is acyclic on `s` for every
/// recursive `r`.
pub fn check_wellfounded<W: World + ?Sized>(n: &CompiledNetwork, s: &W) -> Result<(), CycleWitness> {
    let table = n.dependencies();
    let vocab = n.vocabulary();
    for &r in n.topological_order() {
        if !n.is_recursive(r) {
            continue;
        }
        let arity = vocab.arity(r);
        let size = s.domain_size();
        let roots = all_tuples(arity, size).map(|t| GroundAtom::new(r, t));
        let mut marks = BTreeMap::new();
        let result = traverse(s, roots, &mut marks, |a| {
            let mut out = Vec::new();
            for ys in all_tuples(arity, size) {
                if table.holds(r, r, s, &a.args, &ys)? {
                    out.push(GroundAtom::new(r, ys));
                }
            }
            Ok(out)
        });
        match result {
            Ok(()) => {}
            Err(DependencyError::IllFounded(w)) => return Err(w),
            // Missing rigid interpretations surface when the labels are
            // evaluated.
            Err(_) => {}
        }
    }
    Ok(())
}

/// Names for printing `pa_{r,r'}` in constraint syntax.
pub fn var_names(n: &CompiledNetwork, r: RelId, r2: RelId) -> VarNames {
    VarNames::fresh(&n.label(r).params, n.vocabulary().arity(r2))
}
