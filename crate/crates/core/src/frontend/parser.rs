use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use num::{BigInt, BigRational, One, Zero};

use super::lexer::{tokenize, Span, Tok, Token};
use super::{AtomRef, Item, ModelDocument, ParseError, ScenarioDocument, SignedAtom};
use crate::fol::FOFormula;
use crate::model::{Constraint, Formula, Term};
use crate::scalar::Rational;

/// Nesting limit for formulas and constraints.
pub const MAX_DEPTH: usize = 200;
/// Largest accepted arity.
pub const MAX_ARITY: usize = 12;

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    pub fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: tokenize(text)?, pos: 0, depth: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::new(self.span(), msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, ParseError> {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.unexpected(&t.to_string())
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.error(format!("nesting deeper than {MAX_DEPTH}"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    pub fn at_end(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    fn rational(&mut self) -> Result<Rational, ParseError> {
        let span = self.span();
        let bad = |_| ParseError::new(span, "malformed number");
        match self.bump() {
            Tok::Int(n) => {
                let numer = BigInt::from_str(&n).map_err(bad)?;
                if self.eat(&Tok::Slash) {
                    let dspan = self.span();
                    let denom = match self.bump() {
                        Tok::Int(d) => BigInt::from_str(&d).map_err(bad)?,
                        _ => return Err(ParseError::new(dspan, "expected a denominator")),
                    };
                    if denom.is_zero() {
                        return Err(ParseError::new(dspan, "zero denominator"));
                    }
                    Ok(Rational::new(BigRational::new(numer, denom)))
                } else {
                    Ok(Rational::new(BigRational::from_integer(numer)))
                }
            }
            Tok::Decimal(d) => {
                let (whole, frac) = d.split_once('.').expect("decimal token");
                let digits = BigInt::from_str(&format!("{whole}{frac}")).map_err(bad)?;
                let mut denom = BigInt::one();
                for _ in 0..frac.len() {
                    denom *= 10;
                }
                Ok(Rational::new(BigRational::new(digits, denom)))
            }
            _ => Err(ParseError::new(span, "expected a number")),
        }
    }

    fn arity(&mut self) -> Result<usize, ParseError> {
        let span = self.span();
        match self.bump() {
            Tok::Int(n) => match n.parse::<usize>() {
                Ok(a) if a <= MAX_ARITY => Ok(a),
                _ => Err(ParseError::new(span, format!("arity must be at most {MAX_ARITY}"))),
            },
            _ => Err(ParseError::new(span, "expected an arity")),
        }
    }

    /// `IDENT ("," IDENT)*`, possibly empty, up to (not including) `stop`.
    fn ident_list(&mut self, stop: &Tok) -> Result<Vec<String>, ParseError> {
        let mut out = Vec::new();
        if self.peek() == stop {
            return Ok(out);
        }
        out.push(self.ident()?);
        while self.eat(&Tok::Comma) {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    // ---- models ----

    pub fn model(&mut self) -> Result<(ModelDocument, Vec<Span>), ParseError> {
        let mut items = Vec::new();
        let mut spans = Vec::new();
        let mut params: BTreeMap<String, Rational> = BTreeMap::new();
        while !self.at_end() {
            let span = self.span();
            let item = self.item(&params)?;
            if let Item::Parameter { name, value } = &item {
                if params.insert(name.clone(), value.clone()).is_some() {
                    return Err(ParseError::new(span, format!("parameter `{name}` defined twice")));
                }
            }
            items.push(item);
            spans.push(span);
        }
        let constants: BTreeSet<String> = items
            .iter()
            .filter_map(|i| match i {
                Item::Constant { name } => Some(name.clone()),
                _ => None,
            })
            .collect();
        if !constants.is_empty() {
            for item in &mut items {
                if let Item::Label { formula, .. } = item {
                    *formula = resolve_constants(formula, &constants);
                }
            }
        }
        Ok((ModelDocument { items }, spans))
    }

    fn item(&mut self, params: &BTreeMap<String, Rational>) -> Result<Item, ParseError> {
        let head = self.ident()?;
        match head.as_str() {
            "relation" | "rigid" => {
                let name = self.ident()?;
                self.expect(Tok::Slash)?;
                let arity = self.arity()?;
                self.expect(Tok::Semi)?;
                Ok(if head == "relation" { Item::Relation { name, arity } } else { Item::Rigid { name, arity } })
            }
            "constant" => {
                let name = self.ident()?;
                self.expect(Tok::Semi)?;
                Ok(Item::Constant { name })
            }
            "combfun" => {
                let name = self.ident()?;
                self.keyword("cumulative")?;
                self.expect(Tok::LBracket)?;
                let mut table = vec![self.rational()?];
                while self.eat(&Tok::Comma) {
                    table.push(self.rational()?);
                }
                self.expect(Tok::RBracket)?;
                self.expect(Tok::Semi)?;
                Ok(Item::CombFun { name, table })
            }
            _ => {
                if self.eat(&Tok::Eq) {
                    let value = self.rational()?;
                    self.expect(Tok::Semi)?;
                    return Ok(Item::Parameter { name: head, value });
                }
                self.expect(Tok::LParen)?;
                let params_list = self.ident_list(&Tok::RParen)?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Eq)?;
                let formula = self.formula(params)?;
                self.expect(Tok::Semi)?;
                Ok(Item::Label { relation: head, params: params_list, formula })
            }
        }
    }

    pub fn formula(&mut self, params: &BTreeMap<String, Rational>) -> Result<Formula, ParseError> {
        self.enter()?;
        let out = self.formula_inner(params);
        self.leave();
        out
    }

    fn formula_inner(&mut self, params: &BTreeMap<String, Rational>) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Int(_) | Tok::Decimal(_) => Ok(Formula::Const(self.rational()?)),
            Tok::Ident(name) => {
                let span = self.span();
                self.bump();
                if name == "cc" && *self.peek() == Tok::LParen {
                    self.bump();
                    let a = self.formula(params)?;
                    self.expect(Tok::Comma)?;
                    let b = self.formula(params)?;
                    self.expect(Tok::Comma)?;
                    let c = self.formula(params)?;
                    self.expect(Tok::RParen)?;
                    return Ok(Formula::convex(a, b, c));
                }
                match self.peek() {
                    Tok::LParen => {
                        self.bump();
                        let args = self.ident_list(&Tok::RParen)?;
                        self.expect(Tok::RParen)?;
                        Ok(Formula::Indicator(name, args.into_iter().map(Term::Var).collect()))
                    }
                    Tok::LBrace => {
                        self.bump();
                        let mut args = vec![self.formula(params)?];
                        while self.eat(&Tok::Comma) {
                            args.push(self.formula(params)?);
                        }
                        self.expect(Tok::Bar)?;
                        let bound = self.ident_list(&Tok::Semi)?;
                        self.expect(Tok::Semi)?;
                        let constraint = self.constraint()?;
                        self.expect(Tok::RBrace)?;
                        Ok(Formula::Comb { function: name, args, bound, constraint })
                    }
                    _ => match params.get(&name) {
                        Some(v) => Ok(Formula::Const(v.clone())),
                        None => Err(ParseError::new(span, format!("unknown parameter `{name}`"))),
                    },
                }
            }
            _ => self.unexpected("a probability formula"),
        }
    }

    // ---- constraints ----

    pub fn constraint(&mut self) -> Result<Constraint, ParseError> {
        self.enter()?;
        let out = self.con_or();
        self.leave();
        out
    }

    fn con_or(&mut self) -> Result<Constraint, ParseError> {
        let mut left = self.con_and()?;
        while self.eat(&Tok::Bar) {
            let right = self.con_and()?;
            left = Constraint::or(left, right);
        }
        Ok(left)
    }

    fn con_and(&mut self) -> Result<Constraint, ParseError> {
        let mut left = self.con_unary()?;
        while self.eat(&Tok::Amp) {
            let right = self.con_unary()?;
            left = Constraint::and(left, right);
        }
        Ok(left)
    }

    fn con_unary(&mut self) -> Result<Constraint, ParseError> {
        self.enter()?;
        let out = self.con_unary_inner();
        self.leave();
        out
    }

    fn con_unary_inner(&mut self) -> Result<Constraint, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Constraint::not(self.con_unary()?))
            }
            Tok::LParen => {
                self.bump();
                let c = self.constraint()?;
                self.expect(Tok::RParen)?;
                Ok(c)
            }
            Tok::Ident(name) => {
                self.bump();
                match (name.as_str(), self.peek()) {
                    ("true", _) => Ok(Constraint::True),
                    ("false", _) => Ok(Constraint::False),
                    (_, Tok::LParen) => {
                        self.bump();
                        let args = self.ident_list(&Tok::RParen)?;
                        self.expect(Tok::RParen)?;
                        Ok(Constraint::Rigid(name, args.into_iter().map(Term::Var).collect()))
                    }
                    (_, Tok::Eq) => {
                        self.bump();
                        Ok(Constraint::eq(Term::Var(name), Term::Var(self.ident()?)))
                    }
                    (_, Tok::Neq) => {
                        self.bump();
                        Ok(Constraint::neq(Term::Var(name), Term::Var(self.ident()?)))
                    }
                    _ => self.unexpected("`=`, `!=` or `(`"),
                }
            }
            _ => self.unexpected("a constraint"),
        }
    }

    // ---- scenarios ----

    pub fn scenario(&mut self) -> Result<ScenarioDocument, ParseError> {
        self.keyword("domain")?;
        self.expect(Tok::LBrace)?;
        let mut domain = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            let span = self.span();
            let e = self.ident()?;
            if domain.contains(&e) {
                return Err(ParseError::new(span, format!("element `{e}` listed twice")));
            }
            domain.push(e);
        }
        self.expect(Tok::RBrace)?;
        let mut rigid = Vec::new();
        while self.is_keyword("rigid") {
            self.bump();
            let name = self.ident()?;
            self.expect(Tok::Eq)?;
            self.expect(Tok::LBrace)?;
            let mut tuples = vec![self.tuple()?];
            while self.eat(&Tok::Comma) {
                tuples.push(self.tuple()?);
            }
            self.expect(Tok::RBrace)?;
            rigid.push((name, tuples));
        }
        let mut binds = Vec::new();
        while self.is_keyword("bind") {
            self.bump();
            let c = self.ident()?;
            self.expect(Tok::Eq)?;
            binds.push((c, self.ident()?));
        }
        let mut evidence = Vec::new();
        if self.is_keyword("evidence") {
            self.bump();
            self.expect(Tok::LBrace)?;
            let mut seen: BTreeMap<AtomRef, bool> = BTreeMap::new();
            loop {
                let span = self.span();
                let positive = !self.eat(&Tok::Bang);
                let atom = self.atom()?;
                match seen.get(&atom) {
                    Some(&v) if v != positive => {
                        return Err(ParseError::new(span, format!("contradictory evidence on {atom}")));
                    }
                    _ => {
                        seen.insert(atom.clone(), positive);
                    }
                }
                evidence.push(SignedAtom { positive, atom });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace)?;
        }
        self.keyword("query")?;
        let mut queries = vec![self.atom()?];
        while self.eat(&Tok::Comma) {
            queries.push(self.atom()?);
        }
        self.expect_end()?;
        Ok(ScenarioDocument { domain, rigid, binds, evidence, queries })
    }

    fn tuple(&mut self) -> Result<Vec<String>, ParseError> {
        if self.eat(&Tok::LParen) {
            let t = self.ident_list(&Tok::RParen)?;
            if t.is_empty() {
                return self.unexpected("an element");
            }
            self.expect(Tok::RParen)?;
            Ok(t)
        } else {
            Ok(vec![self.ident()?])
        }
    }

    fn atom(&mut self) -> Result<AtomRef, ParseError> {
        let relation = self.ident()?;
        self.expect(Tok::LParen)?;
        let args = self.ident_list(&Tok::RParen)?;
        self.expect(Tok::RParen)?;
        Ok(AtomRef { relation, args })
    }

    // ---- first-order formulas ----

    pub fn fo(&mut self) -> Result<FOFormula, ParseError> {
        self.enter()?;
        let out = self.fo_or();
        self.leave();
        out
    }

    fn fo_or(&mut self) -> Result<FOFormula, ParseError> {
        let mut left = self.fo_and()?;
        while self.eat(&Tok::Bar) {
            left = FOFormula::or(left, self.fo_and()?);
        }
        Ok(left)
    }

    fn fo_and(&mut self) -> Result<FOFormula, ParseError> {
        let mut left = self.fo_unary()?;
        while self.eat(&Tok::Amp) {
            left = FOFormula::and(left, self.fo_unary()?);
        }
        Ok(left)
    }

    fn fo_unary(&mut self) -> Result<FOFormula, ParseError> {
        self.enter()?;
        let out = self.fo_unary_inner();
        self.leave();
        out
    }

    fn fo_unary_inner(&mut self) -> Result<FOFormula, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(FOFormula::not(self.fo_unary()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.fo()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(name) if name == "exists" || name == "forall" => {
                self.bump();
                let mut vars = vec![self.ident()?];
                while let Tok::Ident(v) = self.peek().clone() {
                    // A variable list ends where the body starts.
                    if matches!(self.peek_at(1), Tok::LParen | Tok::Eq | Tok::Neq) {
                        break;
                    }
                    if v == "exists" || v == "forall" || v == "true" || v == "false" {
                        break;
                    }
                    self.bump();
                    vars.push(v);
                }
                self.eat(&Tok::Dot);
                let mut body = self.fo_unary()?;
                for v in vars.iter().rev() {
                    body = if name == "exists" { FOFormula::exists(v, body) } else { FOFormula::forall(v, body) };
                }
                Ok(body)
            }
            Tok::Ident(name) => {
                self.bump();
                match (name.as_str(), self.peek()) {
                    ("true", _) => Ok(FOFormula::True),
                    ("false", _) => Ok(FOFormula::False),
                    (_, Tok::LParen) => {
                        self.bump();
                        let args = self.ident_list(&Tok::RParen)?;
                        self.expect(Tok::RParen)?;
                        Ok(FOFormula::Atom(name, args))
                    }
                    (_, Tok::Eq) => {
                        self.bump();
                        Ok(FOFormula::Eq(name, self.ident()?))
                    }
                    (_, Tok::Neq) => {
                        self.bump();
                        Ok(FOFormula::not(FOFormula::Eq(name, self.ident()?)))
                    }
                    _ => self.unexpected("`=`, `!=` or `(`"),
                }
            }
            _ => self.unexpected("a formula"),
        }
    }
}

fn resolve_term(t: &Term, constants: &BTreeSet<String>) -> Term {
    match t {
        Term::Var(v) if constants.contains(v) => Term::Const(v.clone()),
        other => other.clone(),
    }
}

fn resolve_constraint(c: &Constraint, constants: &BTreeSet<String>) -> Constraint {
    match c {
        Constraint::True | Constraint::False => c.clone(),
        Constraint::Eq(a, b) => Constraint::Eq(resolve_term(a, constants), resolve_term(b, constants)),
        Constraint::Rigid(r, args) => Constraint::Rigid(r.clone(), args.iter().map(|t| resolve_term(t, constants)).collect()),
        Constraint::Not(inner) => Constraint::not(resolve_constraint(inner, constants)),
        Constraint::And(a, b) => Constraint::and(resolve_constraint(a, constants), resolve_constraint(b, constants)),
        Constraint::Or(a, b) => Constraint::or(resolve_constraint(a, constants), resolve_constraint(b, constants)),
    }
}

/// Turns variables named like declared constants into constant terms.
pub(crate) fn resolve_constants(f: &Formula, constants: &BTreeSet<String>) -> Formula {
    match f {
        Formula::Const(_) => f.clone(),
        Formula::Indicator(r, args) => Formula::Indicator(r.clone(), args.iter().map(|t| resolve_term(t, constants)).collect()),
        Formula::Convex(a, b, c) => Formula::convex(
            resolve_constants(a, constants),
            resolve_constants(b, constants),
            resolve_constants(c, constants),
        ),
        Formula::Comb { function, args, bound, constraint } => Formula::Comb {
            function: function.clone(),
            args: args.iter().map(|a| resolve_constants(a, constants)).collect(),
            bound: bound.clone(),
            constraint: resolve_constraint(constraint, constants),
        },
    }
}
