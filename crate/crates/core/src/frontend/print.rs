use std::fmt::{self, Write};

use super::{AtomRef, Item, ModelDocument, ScenarioDocument};
use crate::model::{Constraint, Formula, Term};

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn join<T: fmt::Display>(items: &[T], sep: &str) -> String {
    items.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(sep)
}

fn precedence(c: &Constraint) -> u8 {
    match c {
        Constraint::Or(..) => 1,
        Constraint::And(..) => 2,
        _ => 3,
    }
}

fn write_constraint(f: &mut fmt::Formatter<'_>, c: &Constraint, min: u8) -> fmt::Result {
    if precedence(c) < min {
        f.write_str("(")?;
        write_constraint(f, c, 0)?;
        return f.write_str(")");
    }
    match c {
        Constraint::True => f.write_str("true"),
        Constraint::False => f.write_str("false"),
        Constraint::Eq(a, b) => write!(f, "{a} = {b}"),
        Constraint::Not(inner) => match inner.as_ref() {
            Constraint::Eq(a, b) => write!(f, "{a} != {b}"),
            other => {
                f.write_str("!")?;
                write_constraint(f, other, 3)
            }
        },
        Constraint::Rigid(r, args) => write!(f, "{}({})", r, join(args, ",")),
        Constraint::And(a, b) => {
            write_constraint(f, a, 2)?;
            f.write_str(" & ")?;
            write_constraint(f, b, 3)
        }
        Constraint::Or(a, b) => {
            write_constraint(f, a, 1)?;
            f.write_str(" | ")?;
            write_constraint(f, b, 2)
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_constraint(f, self, 0)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(q) => write!(f, "{q}"),
            Formula::Indicator(r, args) => write!(f, "{}({})", r, join(args, ",")),
            Formula::Convex(a, b, c) => write!(f, "cc({a}, {b}, {c})"),
            Formula::Comb { function, args, bound, constraint } => {
                write!(f, "{}{{ {} |", function, join(args, ", "))?;
                if !bound.is_empty() {
                    write!(f, " {}", bound.join(", "))?;
                }
                write!(f, " ; {constraint} }}")
            }
        }
    }
}

impl fmt::Display for AtomRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.relation, self.args.join(","))
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Relation { name, arity } => write!(f, "relation {name}/{arity};"),
            Item::Rigid { name, arity } => write!(f, "rigid {name}/{arity};"),
            Item::Constant { name } => write!(f, "constant {name};"),
            Item::Parameter { name, value } => write!(f, "{name} = {value};"),
            Item::CombFun { name, table } => write!(f, "combfun {name} cumulative [{}];", join(table, ", ")),
            Item::Label { relation, params, formula } => {
                write!(f, "{}({}) = {};", relation, params.join(","), formula)
            }
        }
    }
}

/// Model source text; parsing it gives back an equal document.
pub fn print_model(doc: &ModelDocument) -> String {
    let mut out = String::new();
    for item in &doc.items {
        let _ = writeln!(out, "{item}");
    }
    out
}

/// Scenario source text; parsing it gives back an equal document.
pub fn print_scenario(doc: &ScenarioDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "domain {{ {} }}", doc.domain.join(", "));
    for (name, tuples) in &doc.rigid {
        let ts: Vec<String> = tuples.iter().map(|t| format!("({})", t.join(","))).collect();
        let _ = writeln!(out, "rigid {name} = {{ {} }}", ts.join(", "));
    }
    for (c, e) in &doc.binds {
        let _ = writeln!(out, "bind {c} = {e}");
    }
    if !doc.evidence.is_empty() {
        let lits: Vec<String> =
            doc.evidence.iter().map(|l| format!("{}{}", if l.positive { "" } else { "!" }, l.atom)).collect();
        let _ = writeln!(out, "evidence {{ {} }}", lits.join(", "));
    }
    let _ = writeln!(out, "query {}", join(&doc.queries, ", "));
    out
}
