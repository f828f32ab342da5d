//! Exact inference by variable elimination on auxiliary ground networks.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::evaluator::{EvalError, World};
use crate::grounding::{build_auxiliary_network, build_evidence_network, check_atom, Evidence, GroundNetwork, GroundingError};
use crate::model::{CompiledNetwork, GroundAtom, Structure};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InferenceError {
    #[error("evidence has probability zero")]
    InconsistentEvidence,
    #[error("{needed} variables in one factor exceed the budget of {budget} bits")]
    Budget { needed: usize, budget: usize },
    #[error("{0} is not a node of the ground network")]
    NotInNetwork(String),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A table over boolean assignments to `scope`; bit `i` of an index is the
/// value of `scope[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor<S> {
    scope: Vec<usize>,
    table: Vec<S>,
}

impl<S: Scalar> Factor<S> {
    /// `scope` must be strictly increasing.
    pub fn new(scope: Vec<usize>, table: Vec<S>) -> Self {
        assert!(scope.windows(2).all(|w| w[0] < w[1]), "scope must be sorted");
        assert_eq!(table.len(), 1usize << scope.len());
        Factor { scope, table }
    }

    pub fn constant(value: S) -> Self {
        Factor { scope: Vec::new(), table: vec![value] }
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn table(&self) -> &[S] {
        &self.table
    }

    pub fn value(&self, assignment: &BTreeMap<usize, bool>) -> S {
        let mut idx = 0;
        for (bit, v) in self.scope.iter().enumerate() {
            if assignment[v] {
                idx |= 1 << bit;
            }
        }
        self.table[idx].clone()
    }

    pub fn product(&self, other: &Factor<S>) -> Factor<S> {
        let scope: Vec<usize> = self.scope.iter().chain(&other.scope).copied().collect::<BTreeSet<_>>().into_iter().collect();
        let project = |sub: &[usize]| -> Vec<usize> {
            sub.iter().map(|v| 1usize << scope.binary_search(v).expect("subset")).collect()
        };
        let (ma, mb) = (project(&self.scope), project(&other.scope));
        let size = 1usize << scope.len();
        let mut table = Vec::with_capacity(size);
        for idx in 0..size {
            let ia = ma.iter().enumerate().fold(0, |acc, (bit, m)| acc | (((idx & m) != 0) as usize) << bit);
            let ib = mb.iter().enumerate().fold(0, |acc, (bit, m)| acc | (((idx & m) != 0) as usize) << bit);
            table.push(self.table[ia].clone() * other.table[ib].clone());
        }
        Factor { scope, table }
    }

    pub fn sum_out(&self, var: usize) -> Factor<S> {
        let Ok(pos) = self.scope.binary_search(&var) else { return self.clone() };
        self.collapse(pos, |a, b| a + b)
    }

    /// Fixes `var` to `value`.
    pub fn reduce(&self, var: usize, value: bool) -> Factor<S> {
        let Ok(pos) = self.scope.binary_search(&var) else { return self.clone() };
        self.collapse(pos, |a, b| if value { b } else { a })
    }

    fn collapse(&self, pos: usize, f: impl Fn(S, S) -> S) -> Factor<S> {
        let mut scope = self.scope.clone();
        scope.remove(pos);
        let low = (1usize << pos) - 1;
        let table = (0..1usize << scope.len())
            .map(|idx| {
                let base = (idx & low) | ((idx & !low) << 1);
                f(self.table[base].clone(), self.table[base | (1 << pos)].clone())
            })
            .collect();
        Factor { scope, table }
    }
}

/// Elimination order policy.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum ElimOrder {
    /// Fewest fill-in edges first; ties broken by atom name.
    #[default]
    MinFill,
    /// By atom name.
    Lex,
    /// Listed atoms first, in the given order, then the rest by name.
    Custom(Vec<GroundAtom>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InferenceOptions {
    pub order: ElimOrder,
    /// Largest factor scope allowed, in variables.
    pub budget_bits: usize,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions { order: ElimOrder::MinFill, budget_bits: 24 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InferenceResult<S> {
    pub probability: S,
    pub nodes: usize,
    pub edges: usize,
    /// Largest intermediate factor scope minus one.
    pub width: usize,
}

/// One factor per node, with evidence variables sliced away.
fn node_factors<S: Scalar>(g: &GroundNetwork<'_>, e: &Evidence, budget: usize) -> Result<Vec<Factor<S>>, InferenceError> {
    let mut out = Vec::with_capacity(g.node_count());
    for (i, node) in g.nodes().iter().enumerate() {
        let mut family: Vec<usize> = node.parents.clone();
        family.push(i);
        let fixed: Vec<Option<bool>> = family.iter().map(|&v| e.get(&g.nodes()[v].atom)).collect();
        let mut free: Vec<usize> = family.iter().zip(&fixed).filter(|(_, f)| f.is_none()).map(|(v, _)| *v).collect();
        free.sort_unstable();
        free.dedup();
        if free.len() > budget {
            return Err(InferenceError::Budget { needed: free.len(), budget });
        }
        let mut table = Vec::with_capacity(1 << free.len());
        let mut parent_values = vec![false; node.parents.len()];
        for idx in 0..1usize << free.len() {
            let value_of = |v: usize, f: Option<bool>| -> bool {
                f.unwrap_or_else(|| idx & (1 << free.binary_search(&v).expect("free")) != 0)
            };
            for (k, &p) in node.parents.iter().enumerate() {
                parent_values[k] = value_of(p, fixed[k]);
            }
            let own = value_of(i, fixed[family.len() - 1]);
            let p: S = g.node_probability(i, &parent_values)?;
            table.push(if own { p } else { p.complement() });
        }
        out.push(Factor { scope: free, table });
    }
    Ok(out)
}

fn elimination_order(g: &GroundNetwork<'_>, factors: &[Factor<impl Scalar>], vars: &BTreeSet<usize>, order: &ElimOrder) -> Vec<usize> {
    let names: BTreeMap<usize, String> = vars.iter().map(|&v| (v, g.atom_name(v))).collect();
    let by_name = |vs: &BTreeSet<usize>| -> Vec<usize> {
        let mut v: Vec<usize> = vs.iter().copied().collect();
        v.sort_by(|a, b| names[a].cmp(&names[b]));
        v
    };
    match order {
        ElimOrder::Lex => by_name(vars),
        ElimOrder::Custom(atoms) => {
            let mut out = Vec::new();
            let mut rest = vars.clone();
            for a in atoms {
                if let Some(i) = g.index_of(a) {
                    if rest.remove(&i) {
                        out.push(i);
                    }
                }
            }
            out.extend(by_name(&rest));
            out
        }
        ElimOrder::MinFill => {
            let mut adj: BTreeMap<usize, BTreeSet<usize>> = vars.iter().map(|&v| (v, BTreeSet::new())).collect();
            for f in factors {
                for &a in &f.scope {
                    for &b in &f.scope {
                        if a != b && vars.contains(&a) && vars.contains(&b) {
                            adj.get_mut(&a).expect("var").insert(b);
                        }
                    }
                }
            }
            let mut out = Vec::with_capacity(vars.len());
            while !adj.is_empty() {
                let fill = |v: usize| -> usize {
                    let ns: Vec<usize> = adj[&v].iter().copied().collect();
                    let mut count = 0;
                    for i in 0..ns.len() {
                        for j in i + 1..ns.len() {
                            if !adj[&ns[i]].contains(&ns[j]) {
                                count += 1;
                            }
                        }
                    }
                    count
                };
                let best = *adj
                    .keys()
                    .min_by(|a, b| fill(**a).cmp(&fill(**b)).then_with(|| names[a].cmp(&names[b])))
                    .expect("non-empty");
                let ns = adj.remove(&best).expect("present");
                for &a in &ns {
                    let entry = adj.get_mut(&a).expect("neighbour");
                    entry.remove(&best);
                    entry.extend(ns.iter().copied().filter(|&b| b != a));
                }
                out.push(best);
            }
            out
        }
    }
}

/// Multiplies all node factors and sums out every variable except
/// evidence and `keep`. Returns the remaining factor and the width.
fn eliminate<S: Scalar>(
    g: &GroundNetwork<'_>,
    e: &Evidence,
    keep: Option<usize>,
    options: &InferenceOptions,
) -> Result<(Factor<S>, usize), InferenceError> {
    let mut factors: Vec<Factor<S>> = node_factors(g, e, options.budget_bits)?;
    let vars: BTreeSet<usize> =
        (0..g.node_count()).filter(|&i| Some(i) != keep && !e.contains(&g.nodes()[i].atom)).collect();
    let order = elimination_order(g, &factors, &vars, &options.order);
    let mut width = factors.iter().map(|f| f.scope.len()).max().unwrap_or(0);
    for v in order {
        let (with, without): (Vec<Factor<S>>, Vec<Factor<S>>) = factors.into_iter().partition(|f| f.scope.binary_search(&v).is_ok());
        factors = without;
        let scope: BTreeSet<usize> = with.iter().flat_map(|f| f.scope.iter().copied()).collect();
        if scope.len() > options.budget_bits {
            return Err(InferenceError::Budget { needed: scope.len(), budget: options.budget_bits });
        }
        width = width.max(scope.len());
        let mut prod = Factor::constant(S::one());
        for f in &with {
            prod = prod.product(f);
        }
        factors.push(prod.sum_out(v));
    }
    let mut joint = Factor::constant(S::one());
    for f in &factors {
        joint = joint.product(f);
    }
    Ok((joint, width))
}

/// `P(e)` on a network that contains every evidence atom's ancestors.
pub fn evidence_probability<S: Scalar>(
    g: &GroundNetwork<'_>,
    e: &Evidence,
    options: &InferenceOptions,
) -> Result<S, InferenceError> {
    Ok(eliminate::<S>(g, e, None, options)?.0.table[0].clone())
}

/// `P(q | e)` on a ground network by variable elimination.
pub fn variable_elimination<S: Scalar>(
    g: &GroundNetwork<'_>,
    e: &Evidence,
    q: &GroundAtom,
    options: &InferenceOptions,
) -> Result<InferenceResult<S>, InferenceError> {
    let qi = g.index_of(q).ok_or_else(|| InferenceError::NotInNetwork(g.structure().atom_name(q.relation, &q.args)))?;
    let (joint, width) = eliminate::<S>(g, e, Some(qi), options)?;
    let (p_false, p_true) = match joint.scope.as_slice() {
        [] => (S::zero(), joint.table[0].clone()),
        [v] if *v == qi => (joint.table[0].clone(), joint.table[1].clone()),
        _ => unreachable!("only the query remains"),
    };
    let mass = p_false + p_true.clone();
    if mass.is_zero() {
        return Err(InferenceError::InconsistentEvidence);
    }
    Ok(InferenceResult {
        probability: p_true / mass,
        nodes: g.node_count(),
        edges: g.edge_count(),
        width: width.saturating_sub(1),
    })
}

/// `P(q | e)` for the measure `n` defines on `s`.
pub fn infer(n: &CompiledNetwork, s: &Structure, e: &Evidence, q: &GroundAtom) -> Result<f64, InferenceError> {
    Ok(infer_with::<f64>(n, s, e, q, &InferenceOptions::default())?.probability)
}

pub fn infer_with<S: Scalar>(
    n: &CompiledNetwork,
    s: &Structure,
    e: &Evidence,
    q: &GroundAtom,
    options: &InferenceOptions,
) -> Result<InferenceResult<S>, InferenceError> {
    if let Some(v) = e.get(q) {
        check_atom(n, s, q)?;
        let g = build_evidence_network(n, s, e)?;
        if evidence_probability::<S>(&g, e, options)?.is_zero() {
            return Err(InferenceError::InconsistentEvidence);
        }
        let p = if v { S::one() } else { S::zero() };
        return Ok(InferenceResult { probability: p, nodes: g.node_count(), edges: g.edge_count(), width: 0 });
    }
    let g = build_auxiliary_network(n, s, e, q)?;
    let result = variable_elimination(&g, e, q, options)?;
    // Evidence left out of `g` cannot move the answer, but it can still
    // have probability zero.
    if e.atoms().any(|a| !g.contains(a)) {
        let all = build_evidence_network(n, s, e)?;
        if evidence_probability::<S>(&all, e, options)?.is_zero() {
            return Err(InferenceError::InconsistentEvidence);
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(scope: Vec<usize>, table: Vec<f64>) -> Factor<f64> {
        Factor::new(scope, table)
    }

    #[test]
    fn product_aligns_scopes() {
        let a = f(vec![0, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let b = f(vec![1, 2], vec![10.0, 20.0, 30.0, 40.0]);
        let c = a.product(&b);
        assert_eq!(c.scope(), &[0, 1, 2]);
        // x0=1, x1=0, x2=1: a[0b11]=4, b[0b10]=30
        assert_eq!(c.table()[0b101], 120.0);
        // x0=0, x1=1, x2=0: a[0]=1, b[0b01]=20
        assert_eq!(c.table()[0b010], 20.0);
    }

    #[test]
    fn sum_out_and_reduce() {
        let a = f(vec![3, 5], vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(a.sum_out(3).table(), &[3.0, 7.0]);
        assert_eq!(a.sum_out(5).table(), &[4.0, 6.0]);
        assert_eq!(a.reduce(5, true).table(), &[3.0, 4.0]);
        assert_eq!(a.reduce(3, false).table(), &[1.0, 3.0]);
        assert_eq!(a.sum_out(9), a);
    }
}
