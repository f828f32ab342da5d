//! First-order formulas as 0/1-valued probability formulas, plus a direct
//! model checker.

use std::collections::BTreeSet;
use std::fmt;

use crate::evaluator::{Binding, EvalError};
use crate::model::{Constraint, Formula, Structure, Term};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FOFormula {
    True,
    False,
    Atom(String, Vec<String>),
    Eq(String, String),
    Not(Box<FOFormula>),
    And(Box<FOFormula>, Box<FOFormula>),
    Or(Box<FOFormula>, Box<FOFormula>),
    Exists(String, Box<FOFormula>),
    Forall(String, Box<FOFormula>),
}

impl FOFormula {
    pub fn atom(rel: &str, vars: &[&str]) -> Self {
        FOFormula::Atom(rel.to_string(), vars.iter().map(|v| v.to_string()).collect())
    }

    pub fn eq(a: &str, b: &str) -> Self {
        FOFormula::Eq(a.to_string(), b.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: FOFormula) -> Self {
        FOFormula::Not(Box::new(f))
    }

    pub fn and(a: FOFormula, b: FOFormula) -> Self {
        FOFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: FOFormula, b: FOFormula) -> Self {
        FOFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(v: &str, f: FOFormula) -> Self {
        FOFormula::Exists(v.to_string(), Box::new(f))
    }

    pub fn forall(v: &str, f: FOFormula) -> Self {
        FOFormula::Forall(v.to_string(), Box::new(f))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            FOFormula::True | FOFormula::False => BTreeSet::new(),
            FOFormula::Atom(_, vs) => vs.iter().cloned().collect(),
            FOFormula::Eq(a, b) => [a.clone(), b.clone()].into_iter().collect(),
            FOFormula::Not(f) => f.free_vars(),
            FOFormula::And(a, b) | FOFormula::Or(a, b) => {
                let mut out = a.free_vars();
                out.extend(b.free_vars());
                out
            }
            FOFormula::Exists(v, f) | FOFormula::Forall(v, f) => {
                let mut out = f.free_vars();
                out.remove(v);
                out
            }
        }
    }

    pub fn relations(&self) -> BTreeSet<(String, usize)> {
        let mut out = BTreeSet::new();
        self.collect_relations(&mut out);
        out
    }

    fn collect_relations(&self, out: &mut BTreeSet<(String, usize)>) {
        match self {
            FOFormula::Atom(r, vs) => {
                out.insert((r.clone(), vs.len()));
            }
            FOFormula::Not(f) | FOFormula::Exists(_, f) | FOFormula::Forall(_, f) => f.collect_relations(out),
            FOFormula::And(a, b) | FOFormula::Or(a, b) => {
                a.collect_relations(out);
                b.collect_relations(out);
            }
            _ => {}
        }
    }

    /// Nesting depth of connectives and quantifiers.
    pub fn depth(&self) -> usize {
        match self {
            FOFormula::True | FOFormula::False | FOFormula::Atom(..) | FOFormula::Eq(..) => 0,
            FOFormula::Not(f) | FOFormula::Exists(_, f) | FOFormula::Forall(_, f) => 1 + f.depth(),
            FOFormula::And(a, b) | FOFormula::Or(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

impl fmt::Display for FOFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FOFormula::True => f.write_str("true"),
            FOFormula::False => f.write_str("false"),
            FOFormula::Atom(r, vs) => write!(f, "{}({})", r, vs.join(",")),
            FOFormula::Eq(a, b) => write!(f, "{a} = {b}"),
            FOFormula::Not(inner) => match inner.as_ref() {
                FOFormula::Eq(a, b) => write!(f, "{a} != {b}"),
                FOFormula::Atom(..) | FOFormula::True | FOFormula::False | FOFormula::Not(_) => write!(f, "!{inner}"),
                _ => write!(f, "!({inner})"),
            },
            FOFormula::And(a, b) => write!(f, "({a} & {b})"),
            FOFormula::Or(a, b) => write!(f, "({a} | {b})"),
            FOFormula::Exists(v, body) => write!(f, "(exists {v} . {body})"),
            FOFormula::Forall(v, body) => write!(f, "(forall {v} . {body})"),
        }
    }
}

/// Compiles `phi` into a probability formula using only `max`, indicators,
/// constants and convex combinations. Universal quantifiers become
/// `¬∃¬` and disjunctions go through De Morgan.
pub fn translate(phi: &FOFormula) -> Formula {
    match phi {
        FOFormula::True => Formula::one(),
        FOFormula::False => Formula::zero(),
        FOFormula::Atom(r, vs) => Formula::Indicator(r.clone(), vs.iter().map(Term::var).collect()),
        FOFormula::Eq(a, b) => {
            Formula::comb("max", vec![Formula::one()], &[], Constraint::eq(Term::var(a), Term::var(b)))
        }
        FOFormula::Not(f) => Formula::inversion(translate(f)),
        FOFormula::And(a, b) => Formula::product(translate(a), translate(b)),
        FOFormula::Or(a, b) => Formula::inversion(Formula::product(
            Formula::inversion(translate(a)),
            Formula::inversion(translate(b)),
        )),
        FOFormula::Exists(v, f) => Formula::comb("max", vec![translate(f)], &[v.as_str()], Constraint::True),
        FOFormula::Forall(v, f) => Formula::inversion(Formula::comb(
            "max",
            vec![Formula::inversion(translate(f))],
            &[v.as_str()],
            Constraint::True,
        )),
    }
}

fn as_inversion(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Convex(a, b, c) if is_const(b, 0) && is_const(c, 1) => Some(a),
        _ => None,
    }
}

fn is_const(f: &Formula, v: i64) -> bool {
    matches!(f, Formula::Const(q) if *q == crate::scalar::Rational::from_integer(v))
}

/// Rewrites `1 - (1-a)(1-b)` into `max{ a, b | ; true }`. Only sound for
/// 0/1-valued `a` and `b`, which is what [`translate`] produces.
pub fn readable(f: &Formula) -> Formula {
    match f {
        Formula::Convex(a, b, c) => {
            if let Some(Formula::Convex(x, y, z)) = as_inversion(f) {
                if is_const(z, 0) {
                    if let (Some(p), Some(q)) = (as_inversion(x), as_inversion(y)) {
                        return Formula::comb("max", vec![readable(p), readable(q)], &[], Constraint::True);
                    }
                }
            }
            Formula::convex(readable(a), readable(b), readable(c))
        }
        Formula::Comb { function, args, bound, constraint } => Formula::Comb {
            function: function.clone(),
            args: args.iter().map(readable).collect(),
            bound: bound.clone(),
            constraint: constraint.clone(),
        },
        other => other.clone(),
    }
}

/// Tarskian satisfaction with quantifiers over the domain of `s`.
pub fn model_check(phi: &FOFormula, s: &Structure, b: &Binding) -> Result<bool, EvalError> {
    let mut env: Vec<(String, usize)> = b.iter().map(|(k, v)| (k.clone(), *v)).collect();
    check(phi, s, &mut env)
}

fn lookup(env: &[(String, usize)], v: &str) -> Result<usize, EvalError> {
    env.iter()
        .rev()
        .find(|(k, _)| k == v)
        .map(|(_, e)| *e)
        .ok_or_else(|| EvalError::UnboundVariable(v.to_string()))
}

fn check(phi: &FOFormula, s: &Structure, env: &mut Vec<(String, usize)>) -> Result<bool, EvalError> {
    Ok(match phi {
        FOFormula::True => true,
        FOFormula::False => false,
        FOFormula::Atom(r, vs) => {
            let rel = s
                .vocabulary()
                .relation_id(r)
                .ok_or_else(|| EvalError::MissingInterpretation(r.clone()))?;
            let args: Vec<usize> = vs.iter().map(|v| lookup(env, v)).collect::<Result<_, _>>()?;
            let interp = s.interpretation(rel).ok_or_else(|| EvalError::MissingInterpretation(r.clone()))?;
            if args.len() != interp.arity() {
                return Err(EvalError::MissingInterpretation(r.clone()));
            }
            interp.get(&args).ok_or_else(|| EvalError::Undetermined(r.clone()))?
        }
        FOFormula::Eq(a, b) => lookup(env, a)? == lookup(env, b)?,
        FOFormula::Not(f) => !check(f, s, env)?,
        FOFormula::And(a, b) => check(a, s, env)? && check(b, s, env)?,
        FOFormula::Or(a, b) => check(a, s, env)? || check(b, s, env)?,
        FOFormula::Exists(v, f) | FOFormula::Forall(v, f) => {
            let universal = matches!(phi, FOFormula::Forall(..));
            let mut result = universal;
            for e in s.domain().elements() {
                env.push((v.clone(), e));
                let holds = check(f, s, env);
                env.pop();
                if holds? != universal {
                    result = !universal;
                    break;
                }
            }
            result
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{binding, eval_formula};
    use crate::model::{Domain, Vocabulary};
    use std::sync::Arc;

    fn structure() -> Structure {
        let mut v = Vocabulary::new();
        v.declare_probabilistic("b", 2).unwrap();
        v.declare_probabilistic("t", 1).unwrap();
        let mut s = Structure::new(Arc::new(v), Arc::new(Domain::new(["a", "b"]).unwrap()));
        s.interpret_empty(s.vocabulary().relation_id("b").unwrap());
        s.interpret_empty(s.vocabulary().relation_id("t").unwrap());
        s.insert("b", &["a", "b"]).unwrap();
        s
    }

    #[test]
    fn exists_successor() {
        let s = structure();
        let phi = FOFormula::exists("y", FOFormula::atom("b", &["x", "y"]));
        let f = translate(&phi);
        for (x, expect) in [(0, true), (1, false)] {
            let b = binding(&[("x", x)]);
            assert_eq!(model_check(&phi, &s, &b).unwrap(), expect);
            let v: f64 = eval_formula(&f, &s, &b).unwrap();
            assert_eq!(v, if expect { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn exists_forall_witness() {
        let s = structure();
        let phi = FOFormula::exists("y", FOFormula::forall("x", FOFormula::not(FOFormula::atom("b", &["x", "y"]))));
        assert!(model_check(&phi, &s, &Binding::new()).unwrap());
        let v: f64 = eval_formula(&translate(&phi), &s, &Binding::new()).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn only_max_is_used() {
        let phi = FOFormula::forall("x", FOFormula::or(FOFormula::atom("t", &["x"]), FOFormula::eq("x", "y")));
        assert_eq!(translate(&phi).combination_functions(), ["max".to_string()].into_iter().collect());
    }

    #[test]
    fn readable_disjunction() {
        let phi = FOFormula::or(FOFormula::atom("t", &["x"]), FOFormula::atom("t", &["y"]));
        let r = readable(&translate(&phi));
        assert_eq!(r, Formula::comb("max", vec![Formula::atom("t", &["x"]), Formula::atom("t", &["y"])], &[], Constraint::True));
    }
}
