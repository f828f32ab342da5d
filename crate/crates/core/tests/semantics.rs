mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use num::One;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use common::*;
use rbn::evaluator::{binding, eval_formula, joint_probability};
use rbn::fol::{model_check, readable, translate, FOFormula};
use rbn::frontend::parse_formula;
use rbn::{
    all_tuples, brute_force_joint, Binding, Domain, Exact, Formula, Rational, Scalar, Structure, Vocabulary,
};

fn vocabulary() -> Arc<Vocabulary> {
    let mut v = Vocabulary::new();
    v.declare_probabilistic("t", 1).unwrap();
    v.declare_probabilistic("b", 2).unwrap();
    v.declare_rigid("g", 2).unwrap();
    Arc::new(v)
}

fn random_structure(rng: &mut StdRng, size: usize) -> Structure {
    let v = vocabulary();
    let mut s = Structure::new(v.clone(), Arc::new(Domain::numbered("d", size)));
    for r in v.relations().map(|(r, _)| r).collect::<Vec<_>>() {
        let arity = v.arity(r);
        let interp = s.interpret_empty(r);
        for t in all_tuples(arity, size) {
            interp.set(&t, rng.gen_bool(0.5));
        }
    }
    s
}

fn scope_relations() -> Vec<(String, usize)> {
    vec![("t".into(), 1), ("b".into(), 2)]
}

fn rigid() -> Vec<(String, usize)> {
    vec![("g".into(), 2)]
}

fn random_binding(rng: &mut StdRng, vars: &[String], size: usize) -> Binding {
    vars.iter().map(|v| (v.clone(), rng.gen_range(0..size))).collect()
}

/// Renames every bound variable to a fresh name.
fn alpha_rename(f: &Formula, counter: &mut usize) -> Formula {
    match f {
        Formula::Const(_) | Formula::Indicator(..) => f.clone(),
        Formula::Convex(a, b, c) => {
            Formula::convex(alpha_rename(a, counter), alpha_rename(b, counter), alpha_rename(c, counter))
        }
        Formula::Comb { function, args, bound, constraint } => {
            let mut args: Vec<Formula> = args.iter().map(|a| alpha_rename(a, counter)).collect();
            let mut constraint = constraint.clone();
            let mut fresh = Vec::new();
            for z in bound {
                *counter += 1;
                let new = format!("fresh{counter}");
                args = args.iter().map(|a| a.rename_free(z, &new)).collect();
                constraint = constraint.rename_var(z, &new);
                fresh.push(new);
            }
            Formula::Comb { function: function.clone(), args, bound: fresh, constraint }
        }
    }
}

fn random_fo(rng: &mut StdRng, vars: &mut Vec<String>, depth: usize) -> FOFormula {
    if depth == 0 || rng.gen_bool(0.3) {
        if vars.is_empty() {
            return if rng.gen_bool(0.5) { FOFormula::True } else { FOFormula::False };
        }
        let kind = rng.gen_range(0..3);
        let mut pick = || vars.choose(rng).unwrap().clone();
        return match kind {
            0 => FOFormula::Atom("t".into(), vec![pick()]),
            1 => FOFormula::Atom("b".into(), vec![pick(), pick()]),
            _ => FOFormula::Eq(pick(), pick()),
        };
    }
    match rng.gen_range(0..5) {
        0 => FOFormula::not(random_fo(rng, vars, depth - 1)),
        1 => FOFormula::and(random_fo(rng, vars, depth - 1), random_fo(rng, vars, depth - 1)),
        2 => FOFormula::or(random_fo(rng, vars, depth - 1), random_fo(rng, vars, depth - 1)),
        k => {
            let v = format!("v{}", vars.len());
            vars.push(v.clone());
            let body = random_fo(rng, vars, depth - 1);
            vars.pop();
            if k == 3 {
                FOFormula::exists(&v, body)
            } else {
                FOFormula::forall(&v, body)
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn formulas_denote_probabilities(seed in any::<u64>(), size in 1usize..4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let rels = scope_relations();
        let rg = rigid();
        let vars = params(2);
        let f = FormulaGen::new(&mut rng, Scope { relations: &rels, rigid: &rg, constants: &[] }).formula(&vars, 3);
        let s = random_structure(&mut rng, size);
        let b = random_binding(&mut rng, &vars, size);
        let x: f64 = eval_formula(&f, &s, &b).unwrap();
        let q: Exact = eval_formula(&f, &s, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&x), "{f} = {x}");
        prop_assert!((x - Rational::new(q).to_f64()).abs() < 1e-12);
    }

    #[test]
    fn renaming_bound_variables_keeps_the_value(seed in any::<u64>(), size in 1usize..4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let rels = scope_relations();
        let rg = rigid();
        let vars = params(2);
        let f = FormulaGen::new(&mut rng, Scope { relations: &rels, rigid: &rg, constants: &[] }).formula(&vars, 3);
        let g = alpha_rename(&f, &mut 0);
        prop_assert_eq!(f.free_vars(), g.free_vars());
        let s = random_structure(&mut rng, size);
        let b = random_binding(&mut rng, &vars, size);
        let a: Exact = eval_formula(&f, &s, &b).unwrap();
        let c: Exact = eval_formula(&g, &s, &b).unwrap();
        prop_assert_eq!(a, c);
    }

    #[test]
    fn printed_formulas_parse_back(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let rels = scope_relations();
        let rg = rigid();
        let f = FormulaGen::new(&mut rng, Scope { relations: &rels, rigid: &rg, constants: &[] }).formula(&params(2), 4);
        let text = f.to_string();
        let back = parse_formula(&text, &BTreeMap::new()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn translation_agrees_with_model_checking(seed in any::<u64>(), size in 1usize..4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut vars = vec!["x".to_string(), "y".to_string()];
        let phi = random_fo(&mut rng, &mut vars, 4);
        let f = translate(&phi);
        let r = readable(&f);
        let s = random_structure(&mut rng, size);
        for x in 0..size {
            for y in 0..size {
                let b = binding(&[("x", x), ("y", y)]);
                let want = model_check(&phi, &s, &b).unwrap();
                let got: Exact = eval_formula(&f, &s, &b).unwrap();
                let pretty: Exact = eval_formula(&r, &s, &b).unwrap();
                prop_assert_eq!(got.is_one(), want);
                prop_assert_eq!(&got, &pretty);
            }
        }
    }

    #[test]
    fn random_networks_define_a_distribution(seed in any::<u64>(), size in 1usize..3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let arities = random_arities(&mut rng, size);
        let n = random_network(&mut rng, &arities, &rigid(), 3);
        let s = random_rigid(&mut rng, &n, size);
        let joint = brute_force_joint::<Exact>(&n, &s, 16).unwrap();
        prop_assert!(joint.total().is_one());
        // Spot-check the product formula on one world.
        let i = rng.gen_range(0..joint.masses.len());
        let w = joint.structure(&s, i);
        let p: Exact = joint_probability(&n, &w).unwrap();
        prop_assert_eq!(&p, &joint.masses[i]);
    }
}

#[test]
fn noisy_or_of_indicators_is_existence() {
    // noisyor over 0/1 values is 1 exactly when some value is 1.
    let mut rng = StdRng::seed_from_u64(51);
    let f = Formula::comb("noisyor", vec![Formula::atom("b", &["x1", "z"])], &["z"], rbn::Constraint::True);
    let phi = FOFormula::exists("z", FOFormula::atom("b", &["x1", "z"]));
    for size in 1..=4 {
        let s = random_structure(&mut rng, size);
        for x in 0..size {
            let b = binding(&[("x1", x)]);
            let v: f64 = eval_formula(&f, &s, &b).unwrap();
            assert_eq!(v == 1.0, model_check(&phi, &s, &b).unwrap());
        }
    }
}

#[test]
fn scalar_noisy_or_matches_definition() {
    let v = [0.25f64, 0.5, 0.1];
    let want = 1.0 - v.iter().map(|p| 1.0 - p).product::<f64>();
    assert!((f64::noisy_or(&v) - want).abs() < 1e-15);
}
