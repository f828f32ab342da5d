//! Equality-type normal form for dependency formulas without rigid
//! relations or constants.
//!
//! Over pure equality, whether `∃z̄ φ(x̄, ȳ)` holds depends only on which of
//! the free variables are equal and on the size of the domain. The normal
//! form lists, for each satisfying pattern of equalities among `x̄ȳ`, the
//! smallest domain size at which the pattern satisfies the formula.

use std::collections::BTreeMap;
use std::fmt;

use super::formula::{Conjunction, DTerm, DVar, DependencyFormula, Literal, VarNames};
use super::DependencyError;
use crate::model::Elem;

/// A partition of the free variables, as a restricted growth string:
/// `pattern[i]` is the block of variable `i` (x̄ first, then ȳ).
pub type Pattern = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CardinalityNormalForm {
    pub x_arity: usize,
    pub y_arity: usize,
    /// Satisfying patterns with the least domain size needed.
    pub types: BTreeMap<Pattern, usize>,
}

/// The pattern of a concrete tuple of elements.
pub fn pattern_of(elems: &[Elem]) -> Pattern {
    let mut seen: Vec<Elem> = Vec::new();
    elems
        .iter()
        .map(|e| match seen.iter().position(|s| s == e) {
            Some(i) => i,
            None => {
                seen.push(*e);
                seen.len() - 1
            }
        })
        .collect()
}

/// All restricted growth strings of length `n`.
pub fn patterns(n: usize) -> Vec<Pattern> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn go(n: usize, cur: &mut Vec<usize>, blocks: usize, out: &mut Vec<Pattern>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=blocks {
            cur.push(b);
            go(n, cur, blocks.max(b + 1), out);
            cur.pop();
        }
    }
    go(n, &mut cur, 0, &mut out);
    out
}

fn blocks(p: &Pattern) -> usize {
    p.iter().max().map_or(0, |m| m + 1)
}

fn free_index(v: DVar, x_arity: usize) -> Option<usize> {
    match v {
        DVar::X(i) => Some(i),
        DVar::Y(j) => Some(x_arity + j),
        DVar::Z(_) => None,
    }
}

/// Least number of classes needed to satisfy `c` under `pattern`, or `None`.
fn least_size(c: &Conjunction, pattern: &Pattern, x_arity: usize) -> Option<usize> {
    let mut aux: Vec<usize> = Vec::new();
    for l in &c.literals {
        let Literal::Eq(a, b, _) = l else { unreachable!("checked by caller") };
        for t in [a, b] {
            if let DTerm::Var(DVar::Z(k)) = t {
                if !aux.contains(k) {
                    aux.push(*k);
                }
            }
        }
    }
    let base = blocks(pattern);
    let mut assign: BTreeMap<usize, usize> = BTreeMap::new();
    let mut best: Option<usize> = None;
    search(c, pattern, x_arity, &aux, 0, base, &mut assign, &mut best);
    best
}

fn class_of(t: &DTerm, pattern: &Pattern, x_arity: usize, assign: &BTreeMap<usize, usize>) -> Option<usize> {
    match t {
        DTerm::Var(DVar::Z(k)) => assign.get(k).copied(),
        DTerm::Var(v) => Some(pattern[free_index(*v, x_arity).expect("free variable")]),
        DTerm::Const(_) => unreachable!("checked by caller"),
    }
}

fn consistent(c: &Conjunction, pattern: &Pattern, x_arity: usize, assign: &BTreeMap<usize, usize>) -> bool {
    c.literals.iter().all(|l| {
        let Literal::Eq(a, b, p) = l else { return true };
        match (class_of(a, pattern, x_arity, assign), class_of(b, pattern, x_arity, assign)) {
            (Some(a), Some(b)) => (a == b) == *p,
            _ => true,
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn search(
    c: &Conjunction,
    pattern: &Pattern,
    x_arity: usize,
    aux: &[usize],
    next: usize,
    used: usize,
    assign: &mut BTreeMap<usize, usize>,
    best: &mut Option<usize>,
) {
    if !consistent(c, pattern, x_arity, assign) {
        return;
    }
    if best.is_some_and(|b| b <= used) {
        return;
    }
    if next == aux.len() {
        *best = Some(used);
        return;
    }
    for class in 0..=used {
        assign.insert(aux[next], class);
        search(c, pattern, x_arity, aux, next + 1, used.max(class + 1), assign, best);
    }
    assign.remove(&aux[next]);
}

/// Rewrites `d` into equality-type normal form.
pub fn normalize(d: &DependencyFormula) -> Result<CardinalityNormalForm, DependencyError> {
    if d.uses_rigid_symbols() {
        return Err(DependencyError::NotNormalizable(
            "formula mentions rigid relations or constants".to_string(),
        ));
    }
    let n = d.x_arity + d.y_arity;
    let mut types = BTreeMap::new();
    for p in patterns(n) {
        let least = d
            .disjuncts
            .iter()
            .filter_map(|c| least_size(c, &p, d.x_arity))
            .min();
        if let Some(size) = least {
            types.insert(p, size.max(1));
        }
    }
    Ok(CardinalityNormalForm { x_arity: d.x_arity, y_arity: d.y_arity, types })
}

impl CardinalityNormalForm {
    /// Truth at the given tuples in a domain of `domain_size` elements.
    pub fn holds(&self, xs: &[Elem], ys: &[Elem], domain_size: usize) -> bool {
        let mut all: Vec<Elem> = Vec::with_capacity(xs.len() + ys.len());
        all.extend_from_slice(xs);
        all.extend_from_slice(ys);
        self.types.get(&pattern_of(&all)).is_some_and(|&need| need <= domain_size)
    }

    pub fn is_false(&self) -> bool {
        self.types.is_empty()
    }

    /// Every pattern is present and needs no elements beyond its own.
    pub fn is_true(&self) -> bool {
        let all = patterns(self.x_arity + self.y_arity);
        all.len() == self.types.len() && all.iter().all(|p| self.types.get(p) == Some(&blocks(p)))
    }

    pub fn display<'a>(&'a self, names: &'a VarNames) -> NormalFormDisplay<'a> {
        NormalFormDisplay { form: self, names }
    }
}

pub struct NormalFormDisplay<'a> {
    form: &'a CardinalityNormalForm,
    names: &'a VarNames,
}

impl fmt::Display for NormalFormDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.form.is_false() {
            return f.write_str("false");
        }
        if self.form.is_true() {
            return f.write_str("true");
        }
        let vars: Vec<&String> = self.names.x.iter().chain(self.names.y.iter()).collect();
        let many = self.form.types.len() > 1;
        let mut first = true;
        for (p, &need) in &self.form.types {
            let mut lits: Vec<String> = Vec::new();
            let mut reps: Vec<usize> = Vec::new();
            for (i, &b) in p.iter().enumerate() {
                match reps.get(b) {
                    Some(&r) => lits.push(format!("{} = {}", vars[r], vars[i])),
                    None => reps.push(i),
                }
            }
            for a in 0..reps.len() {
                for b in a + 1..reps.len() {
                    lits.push(format!("{} != {}", vars[reps[a]], vars[reps[b]]));
                }
            }
            if need > blocks(p) {
                lits.push(format!("|D| >= {need}"));
            }
            if !first {
                f.write_str(" | ")?;
            }
            first = false;
            match lits.len() {
                0 => f.write_str("true")?,
                1 => f.write_str(&lits[0])?,
                _ if many => write!(f, "({})", lits.join(" & "))?,
                _ => f.write_str(&lits.join(" & "))?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (0..6).map(|n| patterns(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 15, 52]);
    }

    #[test]
    fn pattern_of_tuples() {
        assert_eq!(pattern_of(&[4, 2, 4, 7]), vec![0, 1, 0, 2]);
    }

    #[test]
    fn distinct_aux_raises_domain_size() {
        // ∃z1 z2 (z1 != x & z2 != x & z1 != z2) with x = y
        let z = |k| DTerm::Var(DVar::Z(k));
        let x = DTerm::Var(DVar::X(0));
        let y = DTerm::Var(DVar::Y(0));
        let d = DependencyFormula::from_disjuncts(1, 1, vec![Conjunction::new(vec![
            Literal::Eq(x.clone(), y, true),
            Literal::Eq(z(0), x.clone(), false),
            Literal::Eq(z(1), x, false),
            Literal::Eq(z(0), z(1), false),
        ])]);
        let nf = normalize(&d).unwrap();
        assert_eq!(nf.types.get(&vec![0, 0]), Some(&3));
        assert!(!nf.holds(&[0], &[0], 2));
        assert!(nf.holds(&[1], &[1], 3));
        assert!(!nf.holds(&[0], &[1], 5));
    }
}
