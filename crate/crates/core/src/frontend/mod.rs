//! Model (`.rbn`) and scenario (`.rbs`) languages.
//!
//! ```text
//! relation b/2;  relation t/1;  relation s/1;
//! p = 1/2;
//! b(x,y) = max{ max{ 0 | ; x = y }, max{ p | ; x != y } | ; true };
//! ```
//!
//! Besides the declarations and label clauses, a model may define named
//! parameters (`p = 0.8;`) that stand for their value in later formulas.

mod lexer;
mod parser;
mod print;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use lexer::Span;
pub use parser::{MAX_ARITY, MAX_DEPTH};
pub use print::{print_model, print_scenario};

use crate::combinators::{CombinationFunction, CumulativeTable, Registry, RegistryError, Rule};
use crate::fol::FOFormula;
use crate::grounding::Evidence;
use crate::model::{
    Constraint, Domain, Formula, GroundAtom, NetworkError, RelationalNetwork, Structure, StructureError, ValidationReport,
    Violation, Vocabulary, VocabularyError,
};
use parser::Parser;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        ParseError { span, message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Item {
    Relation { name: String, arity: usize },
    Rigid { name: String, arity: usize },
    Constant { name: String },
    Parameter { name: String, value: crate::scalar::Rational },
    CombFun { name: String, table: Vec<crate::scalar::Rational> },
    Label { relation: String, params: Vec<String>, formula: Formula },
}

/// A parsed model, item by item in source order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ModelDocument {
    pub items: Vec<Item>,
}

impl fmt::Display for ModelDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_model(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomRef {
    pub relation: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignedAtom {
    pub positive: bool,
    pub atom: AtomRef,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ScenarioDocument {
    pub domain: Vec<String>,
    pub rigid: Vec<(String, Vec<Vec<String>>)>,
    pub binds: Vec<(String, String)>,
    pub evidence: Vec<SignedAtom>,
    pub queries: Vec<AtomRef>,
}

impl fmt::Display for ScenarioDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_scenario(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{span}: {source}")]
    Declaration { span: Span, source: VocabularyError },
    #[error("{span}: {source}")]
    CombinationFunction { span: Span, source: RegistryError },
    #[error("{span}: {source}")]
    Label { span: Span, source: NetworkError },
    #[error("{span}: `{relation}` has more than one label")]
    DuplicateLabel { span: Span, relation: String },
    #[error("{0}")]
    Validation(ValidationReport),
}

/// Parses a model and builds its network. Fails on syntax errors and on
/// networks that do not validate.
pub fn parse_model(text: &str) -> Result<(ModelDocument, RelationalNetwork), ModelError> {
    let (doc, spans) = Parser::new(text)?.model()?;
    let network = build_network(&doc, &spans)?;
    let report = network.validate();
    if !report.is_valid() {
        return Err(ModelError::Validation(report));
    }
    Ok((doc, network))
}

/// Syntax only: no vocabulary or validation checks.
pub fn parse_model_document(text: &str) -> Result<ModelDocument, ParseError> {
    Ok(Parser::new(text)?.model()?.0)
}

fn build_network(doc: &ModelDocument, spans: &[Span]) -> Result<RelationalNetwork, ModelError> {
    let mut vocab = Vocabulary::new();
    let mut registry = Registry::builtin();
    let mut out_of_range = Vec::new();
    for (item, &span) in doc.items.iter().zip(spans) {
        let declared = match item {
            Item::Relation { name, arity } => vocab.declare_probabilistic(name, *arity).map(|_| ()),
            Item::Rigid { name, arity } => vocab.declare_rigid(name, *arity).map(|_| ()),
            Item::Constant { name } => vocab.declare_constant(name).map(|_| ()),
            Item::CombFun { name, table } => {
                CumulativeTable::new(table.clone())
                    .and_then(|t| registry.register(CombinationFunction::new(name.clone(), Rule::Cumulative(t))))
                    .map_err(|source| ModelError::CombinationFunction { span, source })?;
                Ok(())
            }
            Item::Parameter { name, value } => {
                if !value.is_probability() {
                    out_of_range.push(Violation::ConstantOutOfRange { relation: name.clone(), value: value.to_string() });
                }
                Ok(())
            }
            Item::Label { .. } => Ok(()),
        };
        declared.map_err(|source| ModelError::Declaration { span, source })?;
    }
    if !out_of_range.is_empty() {
        return Err(ModelError::Validation(ValidationReport { violations: out_of_range }));
    }
    let mut network = RelationalNetwork::new(Arc::new(vocab), Arc::new(registry));
    for (item, &span) in doc.items.iter().zip(spans) {
        if let Item::Label { relation, params, formula } = item {
            let rel = network.vocabulary().relation_id(relation);
            if rel.is_some_and(|r| network.label(r).is_some()) {
                return Err(ModelError::DuplicateLabel { span, relation: relation.clone() });
            }
            let params: Vec<&str> = params.iter().map(String::as_str).collect();
            network
                .set_label(relation, &params, formula.clone())
                .map_err(|source| ModelError::Label { span, source })?;
        }
    }
    Ok(network)
}

/// Parses a scenario. Contradictory evidence is a parse error.
pub fn parse_scenario(text: &str) -> Result<ScenarioDocument, ParseError> {
    Parser::new(text)?.scenario()
}

/// Parses a constraint such as `x != y & leq(x,y)`. Constants are not
/// resolved: every name is a variable.
pub fn parse_constraint(text: &str) -> Result<Constraint, ParseError> {
    let mut p = Parser::new(text)?;
    let c = p.constraint()?;
    p.expect_end()?;
    Ok(c)
}

/// Parses a probability formula; `params` supplies named parameters.
pub fn parse_formula(text: &str, params: &BTreeMap<String, crate::scalar::Rational>) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.formula(params)?;
    p.expect_end()?;
    Ok(f)
}

/// Parses a first-order formula: atoms, `=`, `!=`, `!`, `&`, `|`,
/// `exists y .` and `forall y .` (the dot is optional).
pub fn parse_fo(text: &str) -> Result<FOFormula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.fo()?;
    p.expect_end()?;
    Ok(f)
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("`{0}` is not a rigid relation")]
    NotRigid(String),
    #[error("`{0}` is rigid; evidence and queries must use probabilistic relations")]
    RigidAtom(String),
    #[error("`{0}` is not a declared constant")]
    NotAConstant(String),
    #[error("constant `{0}` is bound twice")]
    DoubleBinding(String),
    #[error("constant `{0}` is not bound to an element")]
    Unbound(String),
}

/// A scenario resolved against a vocabulary.
#[derive(Clone, Debug)]
pub struct Scenario {
    /// Domain, rigid relations and constants. Rigid relations the scenario
    /// does not mention are empty.
    pub structure: Structure,
    pub evidence: Evidence,
    pub queries: Vec<GroundAtom>,
}

impl Scenario {
    pub fn resolve(doc: &ScenarioDocument, vocabulary: &Arc<Vocabulary>) -> Result<Scenario, ScenarioError> {
        let domain = Arc::new(Domain::new(doc.domain.iter().cloned())?);
        let mut s = Structure::new(vocabulary.clone(), domain.clone());
        for r in vocabulary.rigid() {
            s.interpret_empty(r);
        }
        for (name, tuples) in &doc.rigid {
            let rel = vocabulary.relation_id(name).ok_or_else(|| StructureError::UnknownSymbol(name.clone()))?;
            if !vocabulary.is_rigid(rel) {
                return Err(ScenarioError::NotRigid(name.clone()));
            }
            for t in tuples {
                let args: Vec<&str> = t.iter().map(String::as_str).collect();
                s.insert(name, &args)?;
            }
        }
        let mut bound = std::collections::BTreeSet::new();
        for (c, e) in &doc.binds {
            if vocabulary.constant_id(c).is_none() {
                return Err(ScenarioError::NotAConstant(c.clone()));
            }
            if !bound.insert(c.clone()) {
                return Err(ScenarioError::DoubleBinding(c.clone()));
            }
            s.bind(c, e)?;
        }
        if let Some((_, c)) = vocabulary.constants().find(|(_, c)| !bound.contains(*c)) {
            return Err(ScenarioError::Unbound(c.to_string()));
        }
        let resolve = |a: &AtomRef| -> Result<GroundAtom, ScenarioError> {
            let args: Vec<&str> = a.args.iter().map(String::as_str).collect();
            let atom = GroundAtom::parse_parts(vocabulary, &domain, &a.relation, &args)?;
            if vocabulary.is_rigid(atom.relation) {
                return Err(ScenarioError::RigidAtom(a.relation.clone()));
            }
            Ok(atom)
        };
        let mut evidence = Evidence::new();
        for l in &doc.evidence {
            evidence.insert(resolve(&l.atom)?, l.positive).expect("parser rejects contradictions");
        }
        let queries = doc.queries.iter().map(resolve).collect::<Result<_, _>>()?;
        Ok(Scenario { structure: s, evidence, queries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROBOT: &str = "
        relation b/2; relation t/1; relation s/1;
        p0 = 1/2; p1 = 0.5; p2 = 1/2;
        b(x,y) = max{ max{ 0 | ; x = y }, max{ p0 | ; x != y } | ; true };
        t(x) = p1;
        s(x) = cc(t(x), 1, noisyor{ max{ cc(t(z), cc(b(x,z), 0, 1), 0), cc(b(z,x), 0, p2) | ; true } | z ; z != x });
    ";

    #[test]
    fn robot_parses_and_round_trips() {
        let (doc, net) = parse_model(ROBOT).unwrap();
        let s = net.vocabulary().relation_id("s").unwrap();
        let parents: Vec<&str> = net.parents(s).iter().map(|&r| net.vocabulary().relation_name(r)).collect();
        assert_eq!(parents, vec!["b", "t"]);
        let again = parse_model_document(&print_model(&doc)).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn decimals_are_exact() {
        let doc = parse_model_document("p = 0.8;").unwrap();
        assert_eq!(doc.items[0], Item::Parameter { name: "p".into(), value: crate::scalar::Rational::from_fraction(4, 5) });
    }

    #[test]
    fn out_of_range_parameter() {
        let err = parse_model("relation r/1; p = 1.5; r(x) = p;").unwrap_err();
        assert!(matches!(err, ModelError::Validation(_)), "{err}");
        assert!(err.to_string().contains("3/2"));
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_model("relation r/1;\nr(x) = max{ 1 | ; x = };").unwrap_err();
        let ModelError::Parse(p) = err else { panic!("{err}") };
        assert_eq!((p.span.line, p.span.col), (2, 23));
    }

    #[test]
    fn scenario_contradiction() {
        let err = parse_scenario("domain {a} evidence { t(a), !t(a) } query t(a)").unwrap_err();
        assert!(err.message.contains("contradictory"));
    }

    #[test]
    fn scenario_round_trip() {
        let text = "domain {t0,t1,t2} rigid succ = {(t0,t1),(t1,t2)} evidence {r(t1), !r(t2)} query r(t0), r(t2)";
        let doc = parse_scenario(text).unwrap();
        assert_eq!(parse_scenario(&print_scenario(&doc)).unwrap(), doc);
    }

    #[test]
    fn fo_syntax() {
        let f = parse_fo("exists y b(x,y)").unwrap();
        assert_eq!(f, FOFormula::exists("y", FOFormula::atom("b", &["x", "y"])));
        let g = parse_fo("forall x y . x = y | !t(x)").unwrap();
        assert!(matches!(g, FOFormula::Or(..)));
    }

    #[test]
    fn deep_nesting_is_an_error() {
        let text = format!("relation r/1; r(x) = {}1{};", "cc(".repeat(500), ", 0, 1)".repeat(500));
        assert!(parse_model(&text).is_err());
    }
}
