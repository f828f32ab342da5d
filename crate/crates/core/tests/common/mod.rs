//! Shared generators for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use rbn::frontend::{Item, ModelDocument, Scenario};
use rbn::{
    all_tuples, CompiledNetwork, Constraint, Domain, Evidence, Formula, GroundAtom, Rational, Registry,
    RelationalNetwork, Structure, Term, Vocabulary,
};

pub const COMBS: [&str; 4] = ["noisyor", "max", "min", "mean"];

/// What a random formula may refer to.
pub struct Scope<'a> {
    /// `(name, arity)` of relations usable as indicators.
    pub relations: &'a [(String, usize)],
    /// `(name, arity)` of rigid relations usable in constraints.
    pub rigid: &'a [(String, usize)],
    /// Constant names usable as terms.
    pub constants: &'a [String],
}

pub struct FormulaGen<'a> {
    pub rng: &'a mut StdRng,
    pub scope: Scope<'a>,
    fresh: usize,
}

impl<'a> FormulaGen<'a> {
    pub fn new(rng: &'a mut StdRng, scope: Scope<'a>) -> Self {
        FormulaGen { rng, scope, fresh: 0 }
    }

    fn term(&mut self, vars: &[String]) -> Term {
        if !self.scope.constants.is_empty() && (vars.is_empty() || self.rng.gen_bool(0.2)) {
            return Term::constant(self.scope.constants.choose(self.rng).unwrap().clone());
        }
        Term::var(vars.choose(self.rng).unwrap().clone())
    }

    fn rational(&mut self) -> Rational {
        let d = [1, 2, 3, 4, 5, 10][self.rng.gen_range(0..6)];
        Rational::from_fraction(self.rng.gen_range(0..=d), d)
    }

    pub fn constraint(&mut self, vars: &[String], depth: usize) -> Constraint {
        let usable = !vars.is_empty() || !self.scope.constants.is_empty();
        let leaf = depth == 0 || self.rng.gen_bool(0.5);
        if leaf || !usable {
            if !usable || self.rng.gen_bool(0.15) {
                return if self.rng.gen_bool(0.7) { Constraint::True } else { Constraint::False };
            }
            if !self.scope.rigid.is_empty() && self.rng.gen_bool(0.3) {
                let (name, arity) = self.scope.rigid.choose(self.rng).unwrap().clone();
                let args = (0..arity).map(|_| self.term(vars)).collect();
                return Constraint::Rigid(name, args);
            }
            let (a, b) = (self.term(vars), self.term(vars));
            return if self.rng.gen_bool(0.5) { Constraint::eq(a, b) } else { Constraint::neq(a, b) };
        }
        match self.rng.gen_range(0..3) {
            0 => Constraint::not(self.constraint(vars, depth - 1)),
            1 => Constraint::and(self.constraint(vars, depth - 1), self.constraint(vars, depth - 1)),
            _ => Constraint::or(self.constraint(vars, depth - 1), self.constraint(vars, depth - 1)),
        }
    }

    /// A formula whose free variables lie in `vars`.
    pub fn formula(&mut self, vars: &[String], depth: usize) -> Formula {
        let indicator_ok = !self.scope.relations.is_empty() && (!vars.is_empty() || !self.scope.constants.is_empty());
        if depth == 0 || self.rng.gen_bool(0.25) {
            if indicator_ok && self.rng.gen_bool(0.6) {
                let (name, arity) = self.scope.relations.choose(self.rng).unwrap().clone();
                let args = (0..arity).map(|_| self.term(vars)).collect();
                return Formula::Indicator(name, args);
            }
            return Formula::Const(self.rational());
        }
        if self.rng.gen_bool(0.45) {
            return Formula::convex(
                self.formula(vars, depth - 1),
                self.formula(vars, depth - 1),
                self.formula(vars, depth - 1),
            );
        }
        let function = COMBS.choose(self.rng).unwrap().to_string();
        let mut inner = vars.to_vec();
        let mut bound = Vec::new();
        for _ in 0..self.rng.gen_range(0..=1) {
            self.fresh += 1;
            let z = format!("z{}", self.fresh);
            inner.push(z.clone());
            bound.push(z);
        }
        let k = self.rng.gen_range(1..=2);
        let args = (0..k).map(|_| self.formula(&inner, depth - 1)).collect();
        let constraint = self.constraint(&inner, 1);
        Formula::Comb { function, args, bound, constraint }
    }
}

pub fn params(arity: usize) -> Vec<String> {
    (1..=arity).map(|i| format!("x{i}")).collect()
}

/// A random non-recursive network over relations `r0, r1, ...`; each
/// relation reads only earlier ones. `rigid` relations may appear in
/// constraints.
pub fn random_network(
    rng: &mut StdRng,
    arities: &[usize],
    rigid: &[(String, usize)],
    depth: usize,
) -> CompiledNetwork {
    let mut vocab = Vocabulary::new();
    let rels: Vec<(String, usize)> = arities.iter().enumerate().map(|(i, &a)| (format!("r{i}"), a)).collect();
    for (name, arity) in &rels {
        vocab.declare_probabilistic(name, *arity).unwrap();
    }
    for (name, arity) in rigid {
        vocab.declare_rigid(name, *arity).unwrap();
    }
    let mut n = RelationalNetwork::new(Arc::new(vocab), Arc::new(Registry::builtin()));
    for (i, (name, arity)) in rels.iter().enumerate() {
        let ps = params(*arity);
        let scope = Scope { relations: &rels[..i], rigid, constants: &[] };
        let f = FormulaGen::new(rng, scope).formula(&ps, depth);
        let ps: Vec<&str> = ps.iter().map(String::as_str).collect();
        n.set_label(name, &ps, f).unwrap();
    }
    n.compile().unwrap_or_else(|r| panic!("generated network is invalid: {r}"))
}

/// Relation arities for a random network whose atoms fit an enumeration
/// budget of about 16 bits on a domain of `size` elements.
pub fn random_arities(rng: &mut StdRng, size: usize) -> Vec<usize> {
    loop {
        let k = rng.gen_range(1..=3);
        let ar: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=2)).collect();
        let bits: usize = ar.iter().map(|&a| size.pow(a as u32)).sum();
        if bits <= 16 {
            return ar;
        }
    }
}

pub fn domain(size: usize) -> Arc<Domain> {
    Arc::new(Domain::numbered("d", size))
}

/// A structure interpreting the rigid relations at random.
pub fn random_rigid(rng: &mut StdRng, n: &CompiledNetwork, size: usize) -> Structure {
    let mut s = Structure::new(n.vocabulary().clone(), domain(size));
    for r in n.vocabulary().rigid().collect::<Vec<_>>() {
        let arity = n.vocabulary().arity(r);
        let interp = s.interpret_empty(r);
        for t in all_tuples(arity, size) {
            interp.set(&t, rng.gen_bool(0.5));
        }
    }
    s
}

/// Interprets every probabilistic relation at random as well.
pub fn random_full(rng: &mut StdRng, n: &CompiledNetwork, size: usize) -> Structure {
    let mut s = random_rigid(rng, n, size);
    for r in n.vocabulary().probabilistic().collect::<Vec<_>>() {
        let arity = n.vocabulary().arity(r);
        let interp = s.interpret_empty(r);
        for t in all_tuples(arity, size) {
            interp.set(&t, rng.gen_bool(0.5));
        }
    }
    s
}

pub fn probabilistic_atoms(n: &CompiledNetwork, size: usize) -> Vec<GroundAtom> {
    let mut out = Vec::new();
    for r in n.vocabulary().probabilistic() {
        for t in all_tuples(n.vocabulary().arity(r), size) {
            out.push(GroundAtom::new(r, t));
        }
    }
    out
}

/// Up to `max` random evidence literals and a query.
pub fn random_task(rng: &mut StdRng, n: &CompiledNetwork, size: usize, max: usize) -> (Evidence, GroundAtom) {
    let mut atoms = probabilistic_atoms(n, size);
    atoms.shuffle(rng);
    let k = rng.gen_range(0..=max.min(atoms.len()));
    let mut e = Evidence::new();
    for a in &atoms[..k] {
        e.insert(a.clone(), rng.gen_bool(0.5)).unwrap();
    }
    let q = atoms.choose(rng).unwrap().clone();
    (e, q)
}

pub fn corpus(name: &str) -> CompiledNetwork {
    rbn::corpus::network(name).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn corpus_scenario(n: &CompiledNetwork, text: &str) -> Scenario {
    let doc = rbn::frontend::parse_scenario(text).unwrap();
    Scenario::resolve(&doc, n.vocabulary()).unwrap()
}

/// Element names `d1..dn` with a total order `leq` on them.
pub fn total_order_scenario(size: usize) -> String {
    let names: Vec<String> = (1..=size).map(|i| format!("d{i}")).collect();
    let mut pairs = Vec::new();
    for i in 0..size {
        for j in i..size {
            pairs.push(format!("({},{})", names[i], names[j]));
        }
    }
    format!("domain {{ {} }} rigid leq = {{ {} }} query r({},{})", names.join(", "), pairs.join(", "), names[0], names[0])
}

/// Time points `t0..t(len-1)` in a successor chain plus `objects` objects.
pub fn chain_scenario(len: usize, objects: usize, query: &str) -> String {
    let mut names: Vec<String> = (0..len).map(|i| format!("t{i}")).collect();
    names.extend((1..=objects).map(|i| format!("o{i}")));
    let succ: Vec<String> = (1..len).map(|i| format!("(t{},t{})", i - 1, i)).collect();
    let rigid = if succ.is_empty() { String::new() } else { format!("rigid succ = {{ {} }}", succ.join(", ")) };
    format!("domain {{ {} }} {rigid} query {query}", names.join(", "))
}

/// Value elements `w1..wk` (and optionally an argument element `a`), with
/// constants `v1..v3` bound to `w1..wk` (repeating the last one when
/// `k < 3`) and `less` the strict order on the `w`s.
pub fn functional_scenario(k: usize, with_argument: bool, query: &str) -> String {
    let mut names: Vec<String> = Vec::new();
    if with_argument {
        names.push("a".into());
    }
    names.extend((1..=k).map(|i| format!("w{i}")));
    let mut less = Vec::new();
    for i in 1..=k {
        for j in i + 1..=k {
            less.push(format!("(w{i},w{j})"));
        }
    }
    let rigid = if less.is_empty() { String::new() } else { format!("rigid less = {{ {} }}", less.join(", ")) };
    let binds: Vec<String> = (1..=3).map(|i| format!("bind v{i} = w{}", i.min(k))).collect();
    format!("domain {{ {} }} {rigid} {} query {query}", names.join(", "), binds.join(" "))
}

/// A random model document: declarations, parameters, cumulative tables
/// and labels that use them. Not necessarily a valid network.
pub fn random_document(rng: &mut StdRng) -> ModelDocument {
    let mut items = Vec::new();
    let nrel = rng.gen_range(1..=4);
    let rels: Vec<(String, usize)> = (0..nrel).map(|i| (format!("rel{i}"), rng.gen_range(1..=3))).collect();
    let rigid: Vec<(String, usize)> = (0..rng.gen_range(0..=2)).map(|i| (format!("fix{i}"), rng.gen_range(1..=2))).collect();
    let constants: Vec<String> = (0..rng.gen_range(0..=2)).map(|i| format!("c{i}")).collect();
    for (name, arity) in &rels {
        items.push(Item::Relation { name: name.clone(), arity: *arity });
    }
    for (name, arity) in &rigid {
        items.push(Item::Rigid { name: name.clone(), arity: *arity });
    }
    for c in &constants {
        items.push(Item::Constant { name: c.clone() });
    }
    for i in 0..rng.gen_range(0..=2) {
        let d = rng.gen_range(1..=20);
        items.push(Item::Parameter { name: format!("p{i}"), value: Rational::from_fraction(rng.gen_range(0..=d), d) });
    }
    if rng.gen_bool(0.3) {
        let table = (0..rng.gen_range(1..=4)).map(|_| Rational::from_fraction(rng.gen_range(0..=3), 12)).collect();
        items.push(Item::CombFun { name: "acc".into(), table });
    }
    for (name, arity) in &rels {
        let ps = params(*arity);
        let scope = Scope { relations: &rels, rigid: &rigid, constants: &constants };
        let depth = rng.gen_range(0..=5);
        let formula = FormulaGen::new(rng, scope).formula(&ps, depth);
        items.push(Item::Label { relation: name.clone(), params: ps, formula });
    }
    ModelDocument { items }
}
