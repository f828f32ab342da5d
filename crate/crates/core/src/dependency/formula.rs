//! Existential formulas over equality and rigid relations, kept in
//! disjunctive normal form.
//!
//! Free variables come in two tuples: `X` (the arguments of the dependent
//! atom) and `Y` (the arguments of the atom depended on). Every `Z`
//! variable is implicitly existentially quantified.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::evaluator::{EvalError, Lookup, World};
use crate::model::{ConstId, Elem, RelId, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DVar {
    X(usize),
    Y(usize),
    Z(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DTerm {
    Var(DVar),
    Const(ConstId),
}

impl DTerm {
    fn map_vars(&self, f: &impl Fn(DVar) -> DTerm) -> DTerm {
        match self {
            DTerm::Var(v) => f(*v),
            c => c.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    /// `a = b` when the flag is set, `a != b` otherwise.
    Eq(DTerm, DTerm, bool),
    Rigid(RelId, Vec<DTerm>, bool),
}

impl Literal {
    pub fn negate(&self) -> Literal {
        match self {
            Literal::Eq(a, b, p) => Literal::Eq(a.clone(), b.clone(), !p),
            Literal::Rigid(r, args, p) => Literal::Rigid(*r, args.clone(), !p),
        }
    }

    fn terms(&self) -> Vec<&DTerm> {
        match self {
            Literal::Eq(a, b, _) => vec![a, b],
            Literal::Rigid(_, args, _) => args.iter().collect(),
        }
    }

    fn map_vars(&self, f: &impl Fn(DVar) -> DTerm) -> Literal {
        match self {
            Literal::Eq(a, b, p) => Literal::Eq(a.map_vars(f), b.map_vars(f), *p),
            Literal::Rigid(r, args, p) => Literal::Rigid(*r, args.iter().map(|t| t.map_vars(f)).collect(), *p),
        }
    }

    fn oriented(self) -> Literal {
        match self {
            Literal::Eq(a, b, p) if b < a => Literal::Eq(b, a, p),
            other => other,
        }
    }
}

/// A conjunction of literals. `literals` is empty for the true conjunction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Conjunction {
    pub literals: Vec<Literal>,
}

impl Conjunction {
    pub fn truth() -> Self {
        Conjunction { literals: Vec::new() }
    }

    pub fn new(literals: Vec<Literal>) -> Self {
        Conjunction { literals }
    }

    fn aux_vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for l in &self.literals {
            for t in l.terms() {
                if let DTerm::Var(DVar::Z(k)) = t {
                    out.insert(*k);
                }
            }
        }
        out
    }

    fn map_vars(&self, f: &impl Fn(DVar) -> DTerm) -> Conjunction {
        Conjunction { literals: self.literals.iter().map(|l| l.map_vars(f)).collect() }
    }

    pub(crate) fn and(&self, other: &Conjunction) -> Conjunction {
        let mut literals = self.literals.clone();
        literals.extend(other.literals.iter().cloned());
        Conjunction { literals }
    }

    /// Substitutes away auxiliary variables that are equated with another
    /// term, detects syntactic contradictions and sorts the literals.
    /// `None` means unsatisfiable.
    pub fn simplify(&self) -> Option<Conjunction> {
        Some(self.simplify_scoped(&BTreeSet::new())?.renumber_aux())
    }

    /// As [`simplify`](Self::simplify), treating the auxiliary variables in
    /// `open` as free: their quantifier has not been closed yet.
    pub(crate) fn simplify_scoped(&self, open: &BTreeSet<usize>) -> Option<Conjunction> {
        let closed = |t: &DTerm| matches!(t, DTerm::Var(DVar::Z(k)) if !open.contains(k));
        let mut terms: Vec<DTerm> = Vec::new();
        let mut index: BTreeMap<DTerm, usize> = BTreeMap::new();
        for l in &self.literals {
            for t in l.terms() {
                if !index.contains_key(t) {
                    index.insert(t.clone(), terms.len());
                    terms.push(t.clone());
                }
            }
        }
        let mut parent: Vec<usize> = (0..terms.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for l in &self.literals {
            if let Literal::Eq(a, b, true) = l {
                let (ra, rb) = (find(&mut parent, index[a]), find(&mut parent, index[b]));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
        let roots: Vec<usize> = (0..terms.len()).map(|i| find(&mut parent, i)).collect();
        // Smallest member of each class, preferring terms that stay.
        let mut rep: BTreeMap<usize, DTerm> = BTreeMap::new();
        for (i, t) in terms.iter().enumerate() {
            let better = match rep.get(&roots[i]) {
                None => true,
                Some(cur) => (closed(t), t) < (closed(cur), cur),
            };
            if better {
                rep.insert(roots[i], t.clone());
            }
        }
        let mut out: BTreeSet<Literal> = BTreeSet::new();
        for (i, t) in terms.iter().enumerate() {
            let r = &rep[&roots[i]];
            if t != r && !closed(t) {
                out.insert(Literal::Eq(r.clone(), t.clone(), true).oriented());
            }
        }
        let subst = |t: &DTerm| -> DTerm {
            match index.get(t) {
                Some(&i) => rep[&roots[i]].clone(),
                None => t.clone(),
            }
        };
        for l in &self.literals {
            match l {
                Literal::Eq(_, _, true) => {}
                Literal::Eq(a, b, false) => {
                    let (a, b) = (subst(a), subst(b));
                    if a == b {
                        return None;
                    }
                    out.insert(Literal::Eq(a, b, false).oriented());
                }
                Literal::Rigid(r, args, p) => {
                    out.insert(Literal::Rigid(*r, args.iter().map(&subst).collect(), *p));
                }
            }
        }
        for l in &out {
            if let Literal::Rigid(..) = l {
                if out.contains(&l.negate()) {
                    return None;
                }
            }
        }
        Some(Conjunction { literals: out.into_iter().collect() })
    }

    /// Renames auxiliary variables to `Z(0..)` in order of first
    /// occurrence, so equal conjunctions compare equal.
    fn renumber_aux(self) -> Conjunction {
        let mut current = self;
        for _ in 0..4 {
            let mut order: Vec<usize> = Vec::new();
            for l in &current.literals {
                for t in l.terms() {
                    if let DTerm::Var(DVar::Z(k)) = t {
                        if !order.contains(k) {
                            order.push(*k);
                        }
                    }
                }
            }
            let map: BTreeMap<usize, usize> = order.iter().enumerate().map(|(new, old)| (*old, new)).collect();
            let mut next = current.map_vars(&|v| match v {
                DVar::Z(k) => DTerm::Var(DVar::Z(map[&k])),
                other => DTerm::Var(other),
            });
            next.literals = next.literals.into_iter().map(Literal::oriented).collect();
            next.literals.sort();
            next.literals.dedup();
            if next == current {
                return next;
            }
            current = next;
        }
        current
    }
}

/// `∃z̄ (C_1 ∨ ... ∨ C_n)`. No disjuncts is the unsatisfiable formula ε.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DependencyFormula {
    pub x_arity: usize,
    pub y_arity: usize,
    pub disjuncts: Vec<Conjunction>,
}

impl DependencyFormula {
    pub fn epsilon(x_arity: usize, y_arity: usize) -> Self {
        DependencyFormula { x_arity, y_arity, disjuncts: Vec::new() }
    }

    pub fn tautology(x_arity: usize, y_arity: usize) -> Self {
        DependencyFormula { x_arity, y_arity, disjuncts: vec![Conjunction::truth()] }
    }

    pub fn from_disjuncts(x_arity: usize, y_arity: usize, disjuncts: Vec<Conjunction>) -> Self {
        let mut f = DependencyFormula { x_arity, y_arity, disjuncts };
        f.prune();
        f
    }

    pub fn is_epsilon(&self) -> bool {
        self.disjuncts.is_empty()
    }

    /// True if some literal mentions a rigid relation or constant.
    pub fn uses_rigid_symbols(&self) -> bool {
        self.disjuncts.iter().flat_map(|c| &c.literals).any(|l| match l {
            Literal::Rigid(..) => true,
            Literal::Eq(a, b, _) => matches!(a, DTerm::Const(_)) || matches!(b, DTerm::Const(_)),
        })
    }

    pub fn aux_count(&self) -> usize {
        self.disjuncts.iter().flat_map(|c| c.aux_vars()).map(|k| k + 1).max().unwrap_or(0)
    }

    /// Simplifies each disjunct, drops unsatisfiable and duplicate ones and
    /// removes disjuncts implied by a smaller one.
    pub fn prune(&mut self) {
        let ds: Vec<Conjunction> = self.disjuncts.iter().filter_map(Conjunction::simplify).collect();
        self.disjuncts = prune_disjuncts(ds);
    }

    pub fn or(&self, other: &DependencyFormula) -> DependencyFormula {
        let mut ds = self.disjuncts.clone();
        ds.extend(other.disjuncts.iter().cloned());
        DependencyFormula::from_disjuncts(self.x_arity, self.y_arity, ds)
    }

    /// Path composition: `∃w (self(x, w) ∧ next(w, y))`.
    pub fn compose(&self, next: &DependencyFormula) -> DependencyFormula {
        assert_eq!(self.y_arity, next.x_arity);
        let a = self.aux_count();
        let m = self.y_arity;
        let left: Vec<Conjunction> = self
            .disjuncts
            .iter()
            .map(|c| {
                c.map_vars(&|v| match v {
                    DVar::Y(j) => DTerm::Var(DVar::Z(a + j)),
                    other => DTerm::Var(other),
                })
            })
            .collect();
        let right: Vec<Conjunction> = next
            .disjuncts
            .iter()
            .map(|c| {
                c.map_vars(&|v| match v {
                    DVar::X(i) => DTerm::Var(DVar::Z(a + i)),
                    DVar::Z(k) => DTerm::Var(DVar::Z(a + m + k)),
                    y => DTerm::Var(y),
                })
            })
            .collect();
        let mut ds = Vec::new();
        for l in &left {
            for r in &right {
                ds.push(l.and(r));
            }
        }
        DependencyFormula::from_disjuncts(self.x_arity, next.y_arity, ds)
    }

    /// Satisfaction with the auxiliary variables ranging over the domain.
    pub fn holds<W: World + ?Sized>(&self, w: &W, xs: &[Elem], ys: &[Elem]) -> Result<bool, EvalError> {
        for c in &self.disjuncts {
            if conjunction_holds(c, w, xs, ys)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn display<'a>(&'a self, names: &'a VarNames, vocabulary: &'a Vocabulary) -> FormulaDisplay<'a> {
        FormulaDisplay { formula: self, names, vocabulary }
    }
}


/// Sorts and deduplicates disjuncts and drops those implied by another.
pub(crate) fn prune_disjuncts(mut ds: Vec<Conjunction>) -> Vec<Conjunction> {
    ds.sort();
    ds.dedup();
    let mut keep = vec![true; ds.len()];
    for i in 0..ds.len() {
        for j in 0..ds.len() {
            if i != j && keep[j] && keep[i] {
                let a: BTreeSet<&Literal> = ds[j].literals.iter().collect();
                let b: BTreeSet<&Literal> = ds[i].literals.iter().collect();
                if a.is_subset(&b) && (a.len() < b.len() || j < i) {
                    keep[i] = false;
                }
            }
        }
    }
    ds.into_iter().zip(keep).filter(|(_, k)| *k).map(|(d, _)| d).collect()
}


fn conjunction_holds<W: World + ?Sized>(c: &Conjunction, w: &W, xs: &[Elem], ys: &[Elem]) -> Result<bool, EvalError> {
    let aux: Vec<usize> = c.aux_vars().into_iter().collect();
    let mut values: BTreeMap<usize, Elem> = BTreeMap::new();
    search(c, w, xs, ys, &aux, 0, &mut values)
}

fn term_value<W: World + ?Sized>(
    t: &DTerm,
    w: &W,
    xs: &[Elem],
    ys: &[Elem],
    aux: &BTreeMap<usize, Elem>,
) -> Result<Option<Elem>, EvalError> {
    Ok(match t {
        DTerm::Var(DVar::X(i)) => Some(xs[*i]),
        DTerm::Var(DVar::Y(j)) => Some(ys[*j]),
        DTerm::Var(DVar::Z(k)) => aux.get(k).copied(),
        DTerm::Const(c) => Some(
            w.constant(*c)
                .ok_or_else(|| EvalError::UnboundConstant(w.vocabulary().constant_name(*c).to_string()))?,
        ),
    })
}

/// `Some(truth)` once every term of the literal has a value.
fn literal_value<W: World + ?Sized>(
    l: &Literal,
    w: &W,
    xs: &[Elem],
    ys: &[Elem],
    aux: &BTreeMap<usize, Elem>,
) -> Result<Option<bool>, EvalError> {
    match l {
        Literal::Eq(a, b, p) => {
            let (a, b) = (term_value(a, w, xs, ys, aux)?, term_value(b, w, xs, ys, aux)?);
            Ok(match (a, b) {
                (Some(a), Some(b)) => Some((a == b) == *p),
                _ => None,
            })
        }
        Literal::Rigid(rel, args, p) => {
            let mut vals = Vec::with_capacity(args.len());
            for t in args {
                match term_value(t, w, xs, ys, aux)? {
                    Some(v) => vals.push(v),
                    None => return Ok(None),
                }
            }
            match w.lookup(*rel, &vals) {
                Lookup::Known(v) => Ok(Some(v == *p)),
                _ => Err(EvalError::MissingInterpretation(w.vocabulary().relation_name(*rel).to_string())),
            }
        }
    }
}

fn search<W: World + ?Sized>(
    c: &Conjunction,
    w: &W,
    xs: &[Elem],
    ys: &[Elem],
    aux: &[usize],
    next: usize,
    values: &mut BTreeMap<usize, Elem>,
) -> Result<bool, EvalError> {
    for l in &c.literals {
        if literal_value(l, w, xs, ys, values)? == Some(false) {
            return Ok(false);
        }
    }
    if next == aux.len() {
        return Ok(true);
    }
    for d in 0..w.domain_size() {
        values.insert(aux[next], d);
        if search(c, w, xs, ys, aux, next + 1, values)? {
            values.remove(&aux[next]);
            return Ok(true);
        }
    }
    values.remove(&aux[next]);
    Ok(false)
}

/// Printable names for the free variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarNames {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub z_prefix: String,
}

impl VarNames {
    /// `y` (or `y1..yk`) and `z1..` renamed apart from the given `x` names.
    pub fn fresh(x: &[String], y_arity: usize) -> VarNames {
        let taken = |n: &str, x: &[String]| x.iter().any(|v| v == n || v.starts_with(n));
        let mut y_base = "y".to_string();
        while taken(&y_base, x) {
            y_base.push('_');
        }
        let y = if y_arity == 1 {
            vec![y_base.clone()]
        } else {
            (1..=y_arity).map(|i| format!("{y_base}{i}")).collect()
        };
        let mut z_prefix = "z".to_string();
        while taken(&z_prefix, x) {
            z_prefix.push('_');
        }
        VarNames { x: x.to_vec(), y, z_prefix }
    }

    fn var(&self, v: DVar) -> String {
        match v {
            DVar::X(i) => self.x[i].clone(),
            DVar::Y(j) => self.y[j].clone(),
            DVar::Z(k) => format!("{}{}", self.z_prefix, k + 1),
        }
    }
}

pub struct FormulaDisplay<'a> {
    formula: &'a DependencyFormula,
    names: &'a VarNames,
    vocabulary: &'a Vocabulary,
}

impl FormulaDisplay<'_> {
    fn term(&self, t: &DTerm) -> String {
        match t {
            DTerm::Var(v) => self.names.var(*v),
            DTerm::Const(c) => self.vocabulary.constant_name(*c).to_string(),
        }
    }

    fn literal(&self, l: &Literal) -> String {
        match l {
            Literal::Eq(a, b, true) => format!("{} = {}", self.term(a), self.term(b)),
            Literal::Eq(a, b, false) => format!("{} != {}", self.term(a), self.term(b)),
            Literal::Rigid(r, args, p) => {
                let args: Vec<String> = args.iter().map(|t| self.term(t)).collect();
                let atom = format!("{}({})", self.vocabulary.relation_name(*r), args.join(","));
                if *p {
                    atom
                } else {
                    format!("!{atom}")
                }
            }
        }
    }
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ds = &self.formula.disjuncts;
        if ds.is_empty() {
            return f.write_str("false");
        }
        let aux = self.formula.aux_count();
        if aux > 0 {
            let zs: Vec<String> = (0..aux).map(|k| self.names.var(DVar::Z(k))).collect();
            write!(f, "exists {} . ", zs.join(", "))?;
        }
        let parts: Vec<String> = ds
            .iter()
            .map(|c| {
                if c.literals.is_empty() {
                    return "true".to_string();
                }
                let lits: Vec<String> = c.literals.iter().map(|l| self.literal(l)).collect();
                let body = lits.join(" & ");
                if ds.len() > 1 && lits.len() > 1 {
                    format!("({body})")
                } else {
                    body
                }
            })
            .collect();
        let body = parts.join(" | ");
        if aux > 0 && ds.len() > 1 {
            write!(f, "({body})")
        } else {
            f.write_str(&body)
        }
    }
}
