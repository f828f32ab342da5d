mod common;

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::SeedableRng;

use common::*;
use rbn::dependency::{
    ancestor_closure_on_structure, ancestor_formula, check_wellfounded, normalize, parent_formula, structural_formula,
    DependencyError,
};
use rbn::frontend::{parse_model, ModelError};
use rbn::{all_tuples, GroundAtom, Violation};

/// The atoms the closed-form ancestor formula selects equal the ground
/// ancestors found by search.
fn ancestors_agree(n: &rbn::CompiledNetwork, s: &rbn::Structure) {
    let v = n.vocabulary();
    let size = s.domain().len();
    for r in v.probabilistic() {
        for xs in all_tuples(v.arity(r), size) {
            let g = GroundAtom::new(r, xs.clone());
            let closure = ancestor_closure_on_structure(n, s, &g).unwrap();
            let mut selected = BTreeSet::new();
            for r2 in v.probabilistic() {
                let d = ancestor_formula(n, r, r2).unwrap();
                for ys in all_tuples(v.arity(r2), size) {
                    if d.holds(s, &xs, &ys).unwrap() {
                        selected.insert(GroundAtom::new(r2, ys));
                    }
                }
            }
            assert_eq!(selected, closure, "ancestors of {}", g.display(v, s.domain()));
        }
    }
}

#[test]
fn ancestor_formula_matches_search_on_corpus() {
    for name in ["robot", "chain", "diamond", "cancer"] {
        let n = corpus(name);
        for size in 1..=3 {
            let s = rbn::Structure::new(n.vocabulary().clone(), domain(size));
            ancestors_agree(&n, &s);
        }
    }
}

#[test]
fn ancestor_formula_matches_search_on_random_networks() {
    let mut rng = StdRng::seed_from_u64(41);
    let rigid = [("g".to_string(), 2)];
    for net in 0..150 {
        let size = 1 + net % 3;
        let arities = random_arities(&mut rng, size);
        let rg: &[(String, usize)] = if net % 2 == 0 { &rigid } else { &[] };
        let n = random_network(&mut rng, &arities, rg, 3);
        let s = random_rigid(&mut rng, &n, size);
        ancestors_agree(&n, &s);
    }
}

#[test]
fn ancestor_formula_rejects_recursion() {
    let n = corpus("temporal");
    let r = n.vocabulary().relation_id("r").unwrap();
    assert_eq!(ancestor_formula(&n, r, r).unwrap_err(), DependencyError::Recursive);
}

#[test]
fn normal_form_preserves_meaning() {
    let mut rng = StdRng::seed_from_u64(42);
    let mut checked = 0;
    let mut networks: Vec<rbn::CompiledNetwork> = ["robot", "chain", "diamond", "cancer"].iter().map(|m| corpus(m)).collect();
    for _ in 0..100 {
        let arities = random_arities(&mut rng, 2);
        networks.push(random_network(&mut rng, &arities, &[], 3));
    }
    for n in &networks {
        let v = n.vocabulary();
        for r in v.probabilistic() {
            for r2 in v.probabilistic() {
                let d = structural_formula(n, r, r2);
                let nf = normalize(&d).unwrap();
                for size in 1..=5 {
                    let s = rbn::Structure::new(v.clone(), domain(size));
                    for xs in all_tuples(v.arity(r), size) {
                        for ys in all_tuples(v.arity(r2), size) {
                            assert_eq!(nf.holds(&xs, &ys, size), d.holds(&s, &xs, &ys).unwrap());
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(checked > 10_000);
}

#[test]
fn robot_parent_formulas() {
    let n = corpus("robot");
    let v = n.vocabulary();
    let id = |name| v.relation_id(name).unwrap();
    let (s, b, t) = (id("s"), id("b"), id("t"));
    let size = 4;
    let w = rbn::Structure::new(v.clone(), domain(size));
    let sb = parent_formula(&n, s, b).unwrap();
    let st = parent_formula(&n, s, t).unwrap();
    for x in 0..size {
        for y1 in 0..size {
            for y2 in 0..size {
                let want = (y1 == x) != (y2 == x);
                assert_eq!(sb.holds(&w, &[x], &[y1, y2]).unwrap(), want);
            }
            // Every terminal matters to every robot.
            assert!(st.holds(&w, &[x], &[y1]).unwrap());
        }
    }
    assert!(parent_formula(&n, t, s).is_err());
    assert!(parent_formula(&n, b, b).unwrap().is_epsilon());
}

#[test]
fn cardinality_guards_appear_where_needed() {
    // `b(x,y)` depends on `a(y)` only when x != y, and `c(x)` on `a(z)`
    // for every z != x; with one element there is no such z.
    let n = corpus("diamond");
    let v = n.vocabulary();
    let (a, c) = (v.relation_id("a").unwrap(), v.relation_id("c").unwrap());
    let nf = normalize(&structural_formula(&n, c, a)).unwrap();
    assert!(!nf.holds(&[0], &[0], 1));
    assert!(nf.holds(&[0], &[1], 2));
    assert!(!nf.holds(&[0], &[0], 2));
}

#[test]
fn wellfoundedness_depends_on_the_rigid_structure() {
    let n = corpus("symmetric");
    let ok = rbn::corpus::scenario(&n, "symmetric").unwrap();
    assert!(check_wellfounded(&n, &ok.structure).is_ok());
    let bad = rbn::corpus::scenario(&n, "symmetric_partial").unwrap();
    let w = check_wellfounded(&n, &bad.structure).unwrap_err();
    assert_eq!(w.atoms.first(), w.atoms.last());
    assert!(w.atoms.len() >= 3);
}

type Case = (&'static str, fn(&Violation) -> bool);

fn violations(text: &str) -> Vec<Violation> {
    match parse_model(text) {
        Err(ModelError::Validation(r)) => r.violations,
        Ok((_, n)) => n.validate().violations,
        Err(e) => panic!("unexpected error: {e}"),
    }
}

#[test]
fn validation_catches_mutations() {
    let base = "relation a/1; relation b/2; rigid g/2; constant k;\n";
    let cases: &[Case] = &[
        ("a(x) = 1/2;", |v| matches!(v, Violation::MissingLabel { .. })),
        ("a(x) = b(x,x); b(x,y) = a(x);", |v| matches!(v, Violation::Cycle { .. })),
        ("a(x) = 1/2; b(x,y) = c(x);", |v| matches!(v, Violation::UnknownRelation { .. })),
        ("a(x) = 1/2; b(x,y) = g(x,y);", |v| matches!(v, Violation::WrongSymbolKind { .. })),
        ("a(x) = 1/2; b(x,y) = max{ 1 | ; a(x) };", |v| matches!(v, Violation::WrongSymbolKind { .. })),
        ("a(x) = 1/2; b(x,y) = a(x,y);", |v| matches!(v, Violation::ArityMismatch { .. })),
        ("a(x) = 1/2; b(x,y) = a(z);", |v| matches!(v, Violation::StrayFreeVariable { .. })),
        ("a(x) = 1/2; b(x,y) = max{ a(k) | k ; true };", |v| matches!(v, Violation::BoundConstant { .. })),
        ("a(x) = 1/2; b(x,y) = foo{ a(x) | ; true };", |v| matches!(v, Violation::UnknownCombinationFunction { .. })),
        ("a(x) = 3/2; b(x,y) = a(x);", |v| matches!(v, Violation::ConstantOutOfRange { .. })),
        ("a(x,y) = 1/2; b(x,y) = a(x);", |v| matches!(v, Violation::BadParameters { .. })),
        ("a(x) = 1/2; b(x,x) = a(x);", |v| matches!(v, Violation::BadParameters { .. })),
    ];
    for (labels, want) in cases {
        let text = format!("{base}{labels}");
        let found = violations(&text);
        assert!(found.iter().any(want), "{labels}: {found:?}");
    }
    assert!(violations(&format!("{base}a(x) = 1/2; b(x,y) = max{{ a(k) | ; g(x,k) }};")).is_empty());
}

#[test]
fn recursive_models_validate() {
    for name in ["symmetric", "temporal", "temporal_unary", "functional"] {
        let n = corpus(name);
        assert!(n.has_recursion(), "{name}");
    }
}
