//! Bundled example models and scenarios.

use crate::frontend::{parse_model, parse_scenario, ModelError, ParseError, Scenario, ScenarioError};
use crate::model::{CompiledNetwork, ValidationReport};

macro_rules! bundle {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../corpus/", $name)))),*]
    };
}

/// `(file name, source)` for every bundled model.
pub const MODELS: &[(&str, &str)] = bundle!(
    "robot.rbn",
    "symmetric.rbn",
    "temporal.rbn",
    "temporal_unary.rbn",
    "functional.rbn",
    "cancer.rbn",
    "chain.rbn",
    "diamond.rbn",
);

/// `(file name, source)` for every bundled scenario.
pub const SCENARIOS: &[(&str, &str)] = bundle!(
    "robot4.rbs",
    "robot_evidence.rbs",
    "robot_blocked.rbs",
    "symmetric.rbs",
    "symmetric_partial.rbs",
    "temporal.rbs",
    "functional.rbs",
    "cancer.rbs",
    "diamond.rbs",
);

fn lookup(table: &[(&'static str, &'static str)], name: &str) -> Option<&'static str> {
    table.iter().find(|(n, _)| *n == name || n.split('.').next() == Some(name)).map(|(_, s)| *s)
}

/// Source of a bundled model, by file name with or without extension.
pub fn model_source(name: &str) -> Option<&'static str> {
    lookup(MODELS, name)
}

pub fn scenario_source(name: &str) -> Option<&'static str> {
    lookup(SCENARIOS, name)
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("no bundled file `{0}`")]
    Missing(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Invalid(#[from] ValidationReport),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Parses and compiles a bundled model.
pub fn network(name: &str) -> Result<CompiledNetwork, CorpusError> {
    let src = model_source(name).ok_or_else(|| CorpusError::Missing(name.to_string()))?;
    let (_, n) = parse_model(src)?;
    Ok(n.compile()?)
}

/// Parses a bundled scenario against `n`.
pub fn scenario(n: &CompiledNetwork, name: &str) -> Result<Scenario, CorpusError> {
    let src = scenario_source(name).ok_or_else(|| CorpusError::Missing(name.to_string()))?;
    Ok(Scenario::resolve(&parse_scenario(src)?, n.vocabulary())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_model_compiles() {
        for (name, _) in MODELS {
            network(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}
