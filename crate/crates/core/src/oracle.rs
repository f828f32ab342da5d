//! Brute-force enumeration of structures, used to check inference.

use std::collections::BTreeSet;

use crate::dependency::check_wellfounded;
use crate::evaluator::{atom_probability, EvalError};
use crate::grounding::{check_atom, Evidence, GroundingError};
use crate::inference::InferenceError;
use crate::model::{all_tuples, CompiledNetwork, GroundAtom, RelId, Structure};
use crate::scalar::Scalar;

/// Default limit on the number of enumerated atoms.
pub const DEFAULT_BUDGET_BITS: usize = 24;

/// Probabilities of every full interpretation of the probabilistic
/// relations. Bit `i` of an index is the truth value of `atoms[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable<S> {
    pub atoms: Vec<GroundAtom>,
    pub masses: Vec<S>,
}

impl<S: Scalar> JointTable<S> {
    pub fn total(&self) -> S {
        self.masses.iter().cloned().fold(S::zero(), |a, b| a + b)
    }

    /// The structure at index `idx` on top of the rigid part of `s`.
    pub fn structure(&self, s: &Structure, idx: usize) -> Structure {
        let mut out = s.rigid_part();
        for rel in self.atoms.iter().map(|a| a.relation).collect::<BTreeSet<_>>() {
            out.interpret_empty(rel);
        }
        for (bit, a) in self.atoms.iter().enumerate() {
            out.set_atom(a, idx & (1 << bit) != 0);
        }
        out
    }

    /// Marginal probability of `atom`.
    pub fn marginal(&self, atom: &GroundAtom) -> Option<S> {
        let bit = self.atoms.iter().position(|a| a == atom)?;
        Some(
            self.masses
                .iter()
                .enumerate()
                .filter(|(i, _)| i & (1 << bit) != 0)
                .fold(S::zero(), |acc, (_, m)| acc + m.clone()),
        )
    }
}

fn relation_atoms(n: &CompiledNetwork, s: &Structure, rels: &[RelId]) -> Vec<GroundAtom> {
    let size = s.domain().len();
    rels.iter()
        .flat_map(|&r| all_tuples(n.vocabulary().arity(r), size).map(move |t| GroundAtom::new(r, t)))
        .collect()
}

fn check_budget(bits: usize, budget: usize) -> Result<(), InferenceError> {
    if bits > budget {
        Err(InferenceError::Budget { needed: bits, budget })
    } else {
        Ok(())
    }
}

/// Walks every interpretation of `levels` (relations in topological order)
/// with the running product of atom factors, calling `leaf` on each full
/// assignment. Non-recursive relations evaluate their labels once per
/// assignment of the earlier levels.
struct Walker<'a, S, F> {
    n: &'a CompiledNetwork,
    levels: Vec<(RelId, Vec<GroundAtom>)>,
    leaf: F,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar, F: FnMut(&Structure, S) -> Result<(), EvalError>> Walker<'_, S, F> {
    fn walk(&mut self, s: &mut Structure, level: usize, weight: S) -> Result<(), EvalError> {
        if weight.is_zero() {
            return Ok(());
        }
        if level == self.levels.len() {
            return (self.leaf)(s, weight);
        }
        let (rel, atoms) = self.levels[level].clone();
        let count = atoms.len();
        if self.n.is_recursive(rel) {
            for mask in 0..1usize << count {
                for (bit, a) in atoms.iter().enumerate() {
                    s.set_atom(a, mask & (1 << bit) != 0);
                }
                let mut w = weight.clone();
                for (bit, a) in atoms.iter().enumerate() {
                    let p: S = atom_probability(self.n, s, a)?;
                    w = w * if mask & (1 << bit) != 0 { p } else { p.complement() };
                    if w.is_zero() {
                        break;
                    }
                }
                self.walk(s, level + 1, w)?;
            }
            return Ok(());
        }
        let probs: Vec<S> = atoms.iter().map(|a| atom_probability(self.n, s, a)).collect::<Result<_, _>>()?;
        for mask in 0..1usize << count {
            let mut w = weight.clone();
            for (bit, a) in atoms.iter().enumerate() {
                let on = mask & (1 << bit) != 0;
                s.set_atom(a, on);
                w = w * if on { probs[bit].clone() } else { probs[bit].complement() };
            }
            self.walk(s, level + 1, w)?;
        }
        Ok(())
    }
}

fn walker_structure(s: &Structure, rels: &[RelId]) -> Structure {
    let mut out = s.rigid_part();
    for &r in rels {
        out.interpret_empty(r);
    }
    out
}

/// Every interpretation of the probabilistic relations with its
/// probability.
pub fn brute_force_joint<S: Scalar>(
    n: &CompiledNetwork,
    s: &Structure,
    budget_bits: usize,
) -> Result<JointTable<S>, InferenceError> {
    let rels: Vec<RelId> = n.topological_order().to_vec();
    let atoms = relation_atoms(n, s, &rels);
    check_budget(atoms.len(), budget_bits)?;
    if n.has_recursion() {
        check_wellfounded(n, s).map_err(|w| InferenceError::Grounding(GroundingError::IllFounded(w)))?;
    }
    let mut masses = vec![S::zero(); 1 << atoms.len()];
    let levels: Vec<(RelId, Vec<GroundAtom>)> = rels.iter().map(|&r| (r, relation_atoms(n, s, &[r]))).collect();
    let mut walker = Walker {
        n,
        levels,
        leaf: |w: &Structure, weight: S| {
            let mut idx = 0;
            for (bit, a) in atoms.iter().enumerate() {
                if w.atom(a) == Some(true) {
                    idx |= 1 << bit;
                }
            }
            masses[idx] = weight;
            Ok(())
        },
        _marker: std::marker::PhantomData,
    };
    let mut work = walker_structure(s, &rels);
    walker.walk(&mut work, 0, S::one())?;
    Ok(JointTable { atoms, masses })
}

/// `P(q | e)` by enumeration. Relations that are read by the evidence or
/// query but by none of the other relations involved are not enumerated:
/// only their evidence and query atoms contribute factors.
pub fn brute_force_conditional<S: Scalar>(
    n: &CompiledNetwork,
    s: &Structure,
    e: &Evidence,
    q: &GroundAtom,
    budget_bits: usize,
) -> Result<S, InferenceError> {
    check_atom(n, s, q)?;
    for a in e.atoms() {
        check_atom(n, s, a)?;
    }
    if n.has_recursion() {
        check_wellfounded(n, s).map_err(|w| InferenceError::Grounding(GroundingError::IllFounded(w)))?;
    }
    let mentioned: BTreeSet<RelId> = e.atoms().chain(std::iter::once(q)).map(|a| a.relation).collect();
    let mut upstream: BTreeSet<RelId> = BTreeSet::new();
    for &r in &mentioned {
        upstream.extend(n.ancestor_relations(r));
    }
    let enumerated: Vec<RelId> = n
        .topological_order()
        .iter()
        .copied()
        .filter(|r| upstream.contains(r) || (mentioned.contains(r) && n.is_recursive(*r)))
        .collect();
    let sinks: Vec<RelId> = mentioned.iter().copied().filter(|r| !enumerated.contains(r)).collect();
    let bits = relation_atoms(n, s, &enumerated).len();
    check_budget(bits, budget_bits)?;

    let enumerated_set: BTreeSet<RelId> = enumerated.iter().copied().collect();
    let fixed: Vec<(GroundAtom, bool)> =
        e.iter().filter(|(a, _)| enumerated_set.contains(&a.relation)).map(|(a, v)| (a.clone(), v)).collect();
    let sink_evidence: Vec<(GroundAtom, bool)> =
        e.iter().filter(|(a, _)| sinks.contains(&a.relation)).map(|(a, v)| (a.clone(), v)).collect();
    let q_enumerated = enumerated_set.contains(&q.relation);

    let mut mass_e = S::zero();
    let mut mass_eq = S::zero();
    let levels: Vec<(RelId, Vec<GroundAtom>)> = enumerated.iter().map(|&r| (r, relation_atoms(n, s, &[r]))).collect();
    let mut walker = Walker {
        n,
        levels,
        leaf: |w: &Structure, weight: S| {
            if fixed.iter().any(|(a, v)| w.atom(a) != Some(*v)) {
                return Ok(());
            }
            let mut weight = weight;
            for (a, v) in &sink_evidence {
                let p: S = atom_probability(n, w, a)?;
                weight = weight * if *v { p } else { p.complement() };
            }
            let q_part = if let Some(v) = e.get(q) {
                if v {
                    weight.clone()
                } else {
                    S::zero()
                }
            } else if q_enumerated {
                if w.atom(q) == Some(true) {
                    weight.clone()
                } else {
                    S::zero()
                }
            } else {
                weight.clone() * atom_probability::<S>(n, w, q)?
            };
            mass_e = mass_e.clone() + weight;
            mass_eq = mass_eq.clone() + q_part;
            Ok(())
        },
        _marker: std::marker::PhantomData,
    };
    let mut work = walker_structure(s, &enumerated);
    walker.walk(&mut work, 0, S::one())?;
    if mass_e.is_zero() {
        return Err(InferenceError::InconsistentEvidence);
    }
    Ok(mass_eq / mass_e)
}
