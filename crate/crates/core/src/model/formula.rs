//! Surface syntax trees for probability formulas and constraints.
//!
//! Names are kept as strings here; [`super::compile`] resolves them against a
//! vocabulary.

use std::collections::BTreeSet;

use crate::scalar::Rational;

/// An argument position: a variable or a rigid constant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(n) => Some(n),
            Term::Const(_) => None,
        }
    }
}

/// Quantifier-free constraint over equality and rigid relations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    True,
    False,
    Eq(Term, Term),
    Rigid(String, Vec<Term>),
    Not(Box<Constraint>),
    And(Box<Constraint>, Box<Constraint>),
    Or(Box<Constraint>, Box<Constraint>),
}

impl Constraint {
    pub fn eq(a: Term, b: Term) -> Self {
        Constraint::Eq(a, b)
    }

    pub fn neq(a: Term, b: Term) -> Self {
        Constraint::Not(Box::new(Constraint::Eq(a, b)))
    }

    pub fn rigid(name: impl Into<String>, args: Vec<Term>) -> Self {
        Constraint::Rigid(name.into(), args)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Constraint) -> Self {
        Constraint::Not(Box::new(c))
    }

    pub fn and(a: Constraint, b: Constraint) -> Self {
        Constraint::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Constraint, b: Constraint) -> Self {
        Constraint::Or(Box::new(a), Box::new(b))
    }

    /// An equality constraint mentions no rigid relation and no constant.
    pub fn is_equality_constraint(&self) -> bool {
        match self {
            Constraint::True | Constraint::False => true,
            Constraint::Eq(a, b) => a.as_var().is_some() && b.as_var().is_some(),
            Constraint::Rigid(..) => false,
            Constraint::Not(c) => c.is_equality_constraint(),
            Constraint::And(a, b) | Constraint::Or(a, b) => {
                a.is_equality_constraint() && b.is_equality_constraint()
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_terms(&mut |t| {
            if let Term::Var(v) = t {
                out.insert(v.clone());
            }
        });
        out
    }

    pub(crate) fn collect_terms(&self, f: &mut impl FnMut(&Term)) {
        match self {
            Constraint::True | Constraint::False => {}
            Constraint::Eq(a, b) => {
                f(a);
                f(b);
            }
            Constraint::Rigid(_, args) => args.iter().for_each(f),
            Constraint::Not(c) => c.collect_terms(f),
            Constraint::And(a, b) | Constraint::Or(a, b) => {
                a.collect_terms(f);
                b.collect_terms(f);
            }
        }
    }

    pub fn rename_var(&self, from: &str, to: &str) -> Constraint {
        let rt = |t: &Term| match t {
            Term::Var(v) if v == from => Term::Var(to.to_string()),
            other => other.clone(),
        };
        match self {
            Constraint::True => Constraint::True,
            Constraint::False => Constraint::False,
            Constraint::Eq(a, b) => Constraint::Eq(rt(a), rt(b)),
            Constraint::Rigid(n, args) => Constraint::Rigid(n.clone(), args.iter().map(rt).collect()),
            Constraint::Not(c) => Constraint::not(c.rename_var(from, to)),
            Constraint::And(a, b) => Constraint::and(a.rename_var(from, to), b.rename_var(from, to)),
            Constraint::Or(a, b) => Constraint::or(a.rename_var(from, to), b.rename_var(from, to)),
        }
    }
}

/// A probability formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(Rational),
    Indicator(String, Vec<Term>),
    /// `F1*F2 + (1-F1)*F3`.
    Convex(Box<Formula>, Box<Formula>, Box<Formula>),
    Comb {
        function: String,
        args: Vec<Formula>,
        bound: Vec<String>,
        constraint: Constraint,
    },
}

impl Formula {
    pub fn constant(q: Rational) -> Self {
        Formula::Const(q)
    }

    pub fn fraction(numer: i64, denom: i64) -> Self {
        Formula::Const(Rational::from_fraction(numer, denom))
    }

    pub fn zero() -> Self {
        Formula::Const(Rational::zero())
    }

    pub fn one() -> Self {
        Formula::Const(Rational::one())
    }

    /// Indicator with variable arguments.
    pub fn atom(relation: impl Into<String>, vars: &[&str]) -> Self {
        Formula::Indicator(relation.into(), vars.iter().map(|v| Term::var(*v)).collect())
    }

    pub fn convex(a: Formula, b: Formula, c: Formula) -> Self {
        Formula::Convex(Box::new(a), Box::new(b), Box::new(c))
    }

    /// `a * b`, as the convex combination `cc(a, b, 0)`.
    pub fn product(a: Formula, b: Formula) -> Self {
        Formula::convex(a, b, Formula::zero())
    }

    /// `1 - a`, as the convex combination `cc(a, 0, 1)`.
    pub fn inversion(a: Formula) -> Self {
        Formula::convex(a, Formula::zero(), Formula::one())
    }

    pub fn comb(
        function: impl Into<String>,
        args: Vec<Formula>,
        bound: &[&str],
        constraint: Constraint,
    ) -> Self {
        Formula::Comb {
            function: function.into(),
            args,
            bound: bound.iter().map(|s| s.to_string()).collect(),
            constraint,
        }
    }

    /// Free variables: for a combination term, those of its arguments and
    /// constraint minus the bound tuple.
    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            Formula::Const(_) => BTreeSet::new(),
            Formula::Indicator(_, args) => {
                args.iter().filter_map(|t| t.as_var().map(str::to_string)).collect()
            }
            Formula::Convex(a, b, c) => {
                let mut out = a.free_vars();
                out.extend(b.free_vars());
                out.extend(c.free_vars());
                out
            }
            Formula::Comb { args, bound, constraint, .. } => {
                let mut out: BTreeSet<String> = args.iter().flat_map(|f| f.free_vars()).collect();
                out.extend(constraint.vars());
                for z in bound {
                    out.remove(z);
                }
                out
            }
        }
    }

    /// Relation names used as indicators anywhere in the formula.
    pub fn indicator_relations(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Indicator(r, _) = f {
                out.insert(r.clone());
            }
        });
        out
    }

    /// Relation names used inside constraints.
    pub fn constraint_relations(&self) -> BTreeSet<String> {
        fn walk(c: &Constraint, out: &mut BTreeSet<String>) {
            match c {
                Constraint::Rigid(n, _) => {
                    out.insert(n.clone());
                }
                Constraint::Not(c) => walk(c, out),
                Constraint::And(a, b) | Constraint::Or(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                _ => {}
            }
        }
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Comb { constraint, .. } = f {
                walk(constraint, &mut out);
            }
        });
        out
    }

    pub fn combination_functions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Comb { function, .. } = f {
                out.insert(function.clone());
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::Const(_) | Formula::Indicator(..) => {}
            Formula::Convex(a, b, c) => {
                a.visit(f);
                b.visit(f);
                c.visit(f);
            }
            Formula::Comb { args, .. } => args.iter().for_each(|a| a.visit(f)),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Indicator(..) => 1,
            Formula::Convex(a, b, c) => 1 + a.depth().max(b.depth()).max(c.depth()),
            Formula::Comb { args, .. } => 1 + args.iter().map(Formula::depth).max().unwrap_or(0),
        }
    }

    /// Replaces free occurrences of variable `from` by `to`. `to` must not be
    /// captured by a binder on the way down.
    pub fn rename_free(&self, from: &str, to: &str) -> Formula {
        match self {
            Formula::Const(_) => self.clone(),
            Formula::Indicator(r, args) => Formula::Indicator(
                r.clone(),
                args.iter()
                    .map(|t| match t {
                        Term::Var(v) if v == from => Term::Var(to.to_string()),
                        other => other.clone(),
                    })
                    .collect(),
            ),
            Formula::Convex(a, b, c) => Formula::convex(
                a.rename_free(from, to),
                b.rename_free(from, to),
                c.rename_free(from, to),
            ),
            Formula::Comb { function, args, bound, constraint } => {
                if bound.iter().any(|z| z == from) {
                    return self.clone();
                }
                Formula::Comb {
                    function: function.clone(),
                    args: args.iter().map(|a| a.rename_free(from, to)).collect(),
                    bound: bound.clone(),
                    constraint: constraint.rename_var(from, to),
                }
            }
        }
    }
}
