//! Combination functions: maps from finite multisets over `[0,1]` to `[0,1]`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use num::Zero;
use thiserror::Error;

use crate::scalar::{Rational, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("unknown combination function `{0}`")]
    Unknown(String),
    #[error("combination function `{0}` is already registered")]
    Duplicate(String),
    #[error("invalid cumulative table: {0}")]
    InvalidTable(String),
}

/// A finite multiset of probabilities.
///
/// Equality ignores order but respects multiplicities.
#[derive(Clone, Debug, Default)]
pub struct Multiset<S>(pub Vec<S>);

impl<S: Scalar> Multiset<S> {
    pub fn new() -> Self {
        Multiset(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.0
    }

    fn sorted(&self) -> Vec<S> {
        let mut v = self.0.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        v
    }
}

impl<S: Scalar> PartialEq for Multiset<S> {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.sorted() == other.sorted()
    }
}

impl<S> FromIterator<S> for Multiset<S> {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        Multiset(iter.into_iter().collect())
    }
}

/// The distribution function `Γ(n) = γ(0) + ... + γ(n)` of a finite table `γ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CumulativeTable {
    gamma: Vec<Rational>,
    partial: Vec<Rational>,
}

impl CumulativeTable {
    pub fn new(gamma: Vec<Rational>) -> Result<Self, RegistryError> {
        if gamma.is_empty() {
            return Err(RegistryError::InvalidTable("table has no entries".into()));
        }
        let mut partial = Vec::with_capacity(gamma.len());
        let mut acc = num::BigRational::zero();
        for (i, g) in gamma.iter().enumerate() {
            if g.exact() < &num::BigRational::zero() {
                return Err(RegistryError::InvalidTable(format!("entry {i} is negative ({g})")));
            }
            acc += g.exact();
            partial.push(Rational::new(acc.clone()));
        }
        if !partial.last().unwrap().is_probability() {
            return Err(RegistryError::InvalidTable(format!(
                "entries sum to {}, more than 1",
                partial.last().unwrap()
            )));
        }
        Ok(CumulativeTable { gamma, partial })
    }

    pub fn gamma(&self) -> &[Rational] {
        &self.gamma
    }

    /// `Γ(n)`, clamped to the last entry past the end of the table.
    pub fn cumulative(&self, n: usize) -> &Rational {
        &self.partial[n.min(self.partial.len() - 1)]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    NoisyOr,
    Max,
    Min,
    Mean,
    /// `Γ(n)` where `n` counts the nonzero elements, with multiplicity.
    Cumulative(CumulativeTable),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CombinationFunction {
    name: String,
    rule: Rule,
}

impl CombinationFunction {
    pub fn new(name: impl Into<String>, rule: Rule) -> Self {
        CombinationFunction { name: name.into(), rule }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    /// Value on the empty multiset.
    pub fn empty_value<S: Scalar>(&self) -> S {
        self.apply::<S>(&[])
    }

    pub fn apply<S: Scalar>(&self, values: &[S]) -> S {
        match &self.rule {
            Rule::NoisyOr => S::noisy_or(values),
            Rule::Max => values
                .iter()
                .cloned()
                .fold(S::zero(), |m, v| if v > m { v } else { m }),
            Rule::Min => values
                .iter()
                .cloned()
                .fold(S::one(), |m, v| if v < m { v } else { m }),
            Rule::Mean => {
                if values.is_empty() {
                    return S::zero();
                }
                let sum = values.iter().cloned().fold(S::zero(), |a, v| a + v);
                sum / S::from_usize(values.len()).expect("multiset size fits the scalar type")
            }
            Rule::Cumulative(table) => {
                let nonzero = values.iter().filter(|v| !v.is_zero()).count();
                S::from_rational(table.cumulative(nonzero))
            }
        }
    }
}

/// Named combination functions. Built once per model, then read-only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Registry {
    functions: BTreeMap<String, Arc<CombinationFunction>>,
}

pub const BUILTIN_NAMES: [&str; 4] = ["noisyor", "max", "min", "mean"];

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}

impl Registry {
    /// `noisyor`, `max`, `min` and `mean`.
    pub fn builtin() -> Self {
        let mut functions = BTreeMap::new();
        for (name, rule) in BUILTIN_NAMES.iter().zip([Rule::NoisyOr, Rule::Max, Rule::Min, Rule::Mean]) {
            functions.insert(name.to_string(), Arc::new(CombinationFunction::new(*name, rule)));
        }
        Registry { functions }
    }

    pub fn register(&mut self, f: CombinationFunction) -> Result<(), RegistryError> {
        if self.functions.contains_key(f.name()) {
            return Err(RegistryError::Duplicate(f.name().to_string()));
        }
        self.functions.insert(f.name().to_string(), Arc::new(f));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Arc<CombinationFunction>> {
        self.functions.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.functions.contains_key(name)
    }

    pub fn apply<S: Scalar>(&self, name: &str, values: &Multiset<S>) -> Result<S, RegistryError> {
        let f = self.get(name).ok_or_else(|| RegistryError::Unknown(name.to_string()))?;
        Ok(f.apply(values.values()))
    }

    /// Functions that are not built in, in name order.
    pub fn user_defined(&self) -> impl Iterator<Item = &CombinationFunction> {
        self.functions
            .values()
            .filter(|f| !BUILTIN_NAMES.contains(&f.name()))
            .map(|f| f.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;
    use proptest::prelude::*;

    fn ms(v: &[f64]) -> Multiset<f64> {
        Multiset(v.to_vec())
    }

    fn table(gamma: &[(i64, i64)]) -> CumulativeTable {
        CumulativeTable::new(gamma.iter().map(|&(n, d)| Rational::from_fraction(n, d)).collect()).unwrap()
    }

    #[test]
    fn empty_set_conventions() {
        let r = Registry::builtin();
        assert_eq!(r.apply("noisyor", &ms(&[])).unwrap(), 0.0);
        assert_eq!(r.apply("max", &ms(&[])).unwrap(), 0.0);
        assert_eq!(r.apply("min", &ms(&[])).unwrap(), 1.0);
        assert_eq!(r.apply("mean", &ms(&[])).unwrap(), 0.0);
    }

    #[test]
    fn named_rules() {
        let r = Registry::builtin();
        assert!((r.apply("noisyor", &ms(&[0.5, 0.5])).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(r.apply("max", &ms(&[0.2, 0.9, 0.4])).unwrap(), 0.9);
        assert_eq!(r.apply("min", &ms(&[0.2, 0.9, 0.4])).unwrap(), 0.2);
        assert!(matches!(r.apply("nope", &ms(&[])), Err(RegistryError::Unknown(_))));
    }

    #[test]
    fn cumulative_counts_nonzero_entries() {
        // γ = (0.1, 0.2, 0.3); {0, 0.4, 0.9} has two nonzero entries, Γ(2) = 0.6.
        let f = CombinationFunction::new("g", Rule::Cumulative(table(&[(1, 10), (2, 10), (3, 10)])));
        assert!((f.apply(&[0.0f64, 0.4, 0.9]) - 0.6).abs() < 1e-12);
        let exact: Vec<BigRational> = [(0, 1), (2, 5), (9, 10)]
            .iter()
            .map(|&(n, d)| Rational::from_fraction(n, d).exact().clone())
            .collect();
        assert_eq!(f.apply(&exact), Rational::from_fraction(3, 5).exact().clone());
    }

    #[test]
    fn cumulative_clamps_past_table_end() {
        let f = CombinationFunction::new("g", Rule::Cumulative(table(&[(1, 10), (2, 10)])));
        assert!((f.apply(&[1.0f64, 1.0, 1.0, 1.0]) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn register_then_apply() {
        let mut r = Registry::builtin();
        r.register(CombinationFunction::new("g", Rule::Cumulative(table(&[(1, 10), (2, 10), (3, 10)]))))
            .unwrap();
        // No nonzero entries: Γ(0) = γ(0).
        assert!((r.apply("g", &ms(&[])).unwrap() - 0.1).abs() < 1e-12);
        assert!((r.apply("mean", &ms(&[0.2, 0.4])).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(
            r.register(CombinationFunction::new("max", Rule::Max)),
            Err(RegistryError::Duplicate("max".into()))
        );
    }

    #[test]
    fn invalid_tables_rejected() {
        assert!(CumulativeTable::new(vec![]).is_err());
        assert!(CumulativeTable::new(vec![Rational::from_fraction(-1, 10)]).is_err());
        assert!(CumulativeTable::new(vec![Rational::from_fraction(3, 4), Rational::from_fraction(1, 2)]).is_err());
    }

    #[test]
    fn multiset_equality_counts_multiplicity() {
        assert_eq!(ms(&[0.3, 0.7, 0.3]), ms(&[0.7, 0.3, 0.3]));
        assert_ne!(ms(&[0.3, 0.7]), ms(&[0.3, 0.7, 0.7]));
    }

    fn all_functions() -> Vec<CombinationFunction> {
        vec![
            CombinationFunction::new("noisyor", Rule::NoisyOr),
            CombinationFunction::new("max", Rule::Max),
            CombinationFunction::new("min", Rule::Min),
            CombinationFunction::new("mean", Rule::Mean),
            CombinationFunction::new("g", Rule::Cumulative(table(&[(1, 4), (1, 4), (1, 3)]))),
        ]
    }

    proptest! {
        #[test]
        fn output_in_unit_interval(values in prop::collection::vec(0.0f64..=1.0, 0..12)) {
            for f in all_functions() {
                let v = f.apply(&values);
                prop_assert!((0.0..=1.0).contains(&v), "{} gave {}", f.name(), v);
            }
        }

        #[test]
        fn permutation_invariant(values in prop::collection::vec(0.0f64..=1.0, 0..10), seed in any::<u64>()) {
            let mut shuffled = values.clone();
            // Fisher-Yates with a tiny LCG so the case stays reproducible.
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            for f in all_functions() {
                let a = f.apply(&values);
                let b = f.apply(&shuffled);
                match f.rule() {
                    // Sums in a different order may differ in the last bit.
                    Rule::Mean | Rule::NoisyOr => prop_assert!((a - b).abs() < 1e-12),
                    _ => prop_assert_eq!(a, b),
                }
            }
        }

        #[test]
        fn noisy_or_monotone(base in prop::collection::vec(0.0f64..=1.0, 0..8), extra in prop::collection::vec(0.0f64..=1.0, 0..8)) {
            let f = CombinationFunction::new("noisyor", Rule::NoisyOr);
            let mut bigger = base.clone();
            bigger.extend(extra);
            prop_assert!(f.apply(&base) <= f.apply(&bigger) + 1e-15);
        }

        #[test]
        fn cumulative_ignores_nonzero_magnitudes(values in prop::collection::vec(0.0f64..=1.0, 0..8), idx in any::<usize>(), repl in 0.001f64..=1.0) {
            let f = &all_functions()[4];
            let before = f.apply(&values);
            let mut changed = values.clone();
            if !changed.is_empty() {
                let i = idx % changed.len();
                if changed[i] != 0.0 {
                    changed[i] = repl;
                }
            }
            prop_assert_eq!(before, f.apply(&changed));
        }
    }
}
