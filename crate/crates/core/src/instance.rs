//! JSON representation of game instances and strategy profiles.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::canonical::{self, format_sig17};
use crate::error::{Error, Result};
use crate::game::{
    EngineStrategy, Game, GameConfig, PrefixChainStrategy, SingletonStrategy, TypeDistribution,
    UserType,
};
use crate::markov::MarkovUserModel;
use crate::rules::{RuleKind, SelectionRuleSpec};

/// A complete, validated game: configuration, user types and selection rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub config: GameConfig,
    pub types: TypeDistribution,
    pub rule: SelectionRuleSpec,
}

#[derive(Deserialize)]
struct TypeRecord {
    pages: Vec<usize>,
    threshold: usize,
    #[serde(with = "canonical::prob")]
    prob: f64,
}

#[derive(Deserialize)]
struct RuleRecord {
    name: String,
    #[serde(default)]
    params: RuleParams,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RuleParams {
    #[serde(default)]
    weights: Option<Vec<f64>>,
    #[serde(default)]
    pages: Option<usize>,
    #[serde(default)]
    success: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    failure: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct InstanceRecord {
    beta: f64,
    engines: usize,
    pages: usize,
    max_threshold: usize,
    types: Vec<TypeRecord>,
    rule: RuleRecord,
}

fn missing(rule: &str, field: &str) -> Error {
    Error::Configuration(format!("rule `{rule}` needs `{field}`"))
}

/// Builds a rule from its schema name and parameters.
pub fn rule_from_parts(
    name: &str,
    engines: usize,
    weights: Option<Vec<f64>>,
    pages: Option<usize>,
    markov: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)>,
) -> Result<SelectionRuleSpec> {
    let kind = match name {
        "proportional" => RuleKind::Proportional,
        "markovian" => RuleKind::Markovian,
        "majority" => RuleKind::Majority,
        "gamma_power" => RuleKind::GammaPower,
        "weighted_proportional" => {
            RuleKind::WeightedProportional(weights.ok_or_else(|| missing(name, "weights"))?)
        }
        "truncated_indifferent" => {
            RuleKind::TruncatedIndifferent(pages.ok_or_else(|| missing(name, "pages"))?)
        }
        "induced_markov" => {
            let (s, f) = markov.ok_or_else(|| missing(name, "success and failure"))?;
            RuleKind::InducedMarkov(MarkovUserModel::new(s, f)?)
        }
        other => return Err(Error::UnknownRule(other.into())),
    };
    SelectionRuleSpec::new(kind, engines)
}

pub fn rule_to_value(rule: &SelectionRuleSpec) -> Value {
    let mut m = Map::new();
    match rule.kind() {
        RuleKind::WeightedProportional(w) => {
            m.insert("weights".into(), w.iter().map(|&x| canonical::number(x)).collect());
        }
        RuleKind::TruncatedIndifferent(n) => {
            m.insert("pages".into(), json!(n));
        }
        RuleKind::InducedMarkov(model) => {
            let mat = |rows: &[Vec<f64>]| -> Value {
                rows.iter()
                    .map(|r| r.iter().map(|&x| canonical::number(x)).collect::<Value>())
                    .collect()
            };
            m.insert("success".into(), mat(model.success()));
            m.insert("failure".into(), mat(model.failure()));
        }
        _ => {}
    }
    json!({ "name": rule.kind().name(), "params": Value::Object(m) })
}

impl Instance {
    pub fn new(config: GameConfig, types: TypeDistribution, rule: SelectionRuleSpec) -> Result<Self> {
        let inst = Instance {
            config,
            types,
            rule,
        };
        Game::new(&inst.config, &inst.types, &inst.rule)?;
        Ok(inst)
    }

    pub fn game(&self) -> Game<'_> {
        Game {
            config: &self.config,
            types: &self.types,
            rule: &self.rule,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: InstanceRecord = serde_json::from_str(text)?;
        let config = GameConfig::new(rec.beta, rec.engines, rec.pages, rec.max_threshold)?;
        let entries = rec
            .types
            .into_iter()
            .map(|t| Ok((UserType::new(t.pages, t.threshold)?, t.prob)))
            .collect::<Result<Vec<_>>>()?;
        let types = TypeDistribution::new(rec.pages, entries)?;
        let name = rec.rule.name;
        let r = rec.rule.params;
        let markov = match (r.success, r.failure) {
            (Some(s), Some(f)) => Some((s, f)),
            _ => None,
        };
        let rule = rule_from_parts(&name, rec.engines, r.weights, r.pages, markov)?;
        Self::new(config, types, rule)
    }

    pub fn to_value(&self) -> Value {
        let types: Vec<Value> = self
            .types
            .entries()
            .iter()
            .map(|(t, p)| {
                json!({
                    "pages": t.pages(),
                    "threshold": t.threshold(),
                    "prob": format_sig17(*p),
                })
            })
            .collect();
        json!({
            "beta": canonical::number(self.config.beta),
            "engines": self.config.engines,
            "pages": self.config.pages,
            "max_threshold": self.config.max_threshold,
            "types": types,
            "rule": rule_to_value(&self.rule),
        })
    }

    pub fn to_json(&self) -> String {
        canonical::to_canonical_string(&self.to_value())
    }
}

/// `{"strategies": [...]}`: one entry per engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    pub strategies: Vec<EngineStrategy>,
}

/// Parses a profile and re-validates every strategy.
pub fn parse_profile(text: &str, num_pages: usize) -> Result<Vec<EngineStrategy>> {
    let file: ProfileFile = serde_json::from_str(text)?;
    file.strategies
        .into_iter()
        .map(|s| match s {
            EngineStrategy::Singleton(s) => {
                if s.num_pages() != num_pages {
                    return Err(Error::InvalidStrategy(format!(
                        "strategy has {} pages, instance has {num_pages}",
                        s.num_pages()
                    )));
                }
                Ok(SingletonStrategy::new(s.probs().to_vec())?.into())
            }
            EngineStrategy::Chains(c) => Ok(PrefixChainStrategy::new(
                num_pages,
                c.atoms().iter().map(|a| (a.pages.clone(), a.weight)).collect(),
            )?
            .into()),
        })
        .collect()
}

pub fn profile_to_json(profile: &[EngineStrategy]) -> Result<String> {
    canonical::to_canonical_json(&ProfileFile {
        strategies: profile.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_identical() {
        let types = TypeDistribution::singleton(&[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let config = GameConfig::singleton(0.1, 2, &types).unwrap();
        let rule = SelectionRuleSpec::new(RuleKind::WeightedProportional(vec![0.3, 1.7]), 2).unwrap();
        let inst = Instance::new(config, types, rule).unwrap();
        let text = inst.to_json();
        assert!(text.contains("\"0.66666666666666663\""));
        assert!(text.contains("\"params\": {\n      \"weights\""));
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = Instance::from_json("{\n  \"beta\": 0.5,\n  oops\n}").unwrap_err();
        match err {
            Error::Parse(msg) => assert!(msg.starts_with("line 3"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn profile_round_trip() {
        let p: Vec<EngineStrategy> = vec![
            SingletonStrategy::new(vec![0.25, 0.75]).unwrap().into(),
            SingletonStrategy::deterministic(0, 2).into(),
        ];
        let text = profile_to_json(&p).unwrap();
        assert_eq!(parse_profile(&text, 2).unwrap(), p);
        let chains = "{\"strategies\": [{\"chains\": [{\"pages\": [0, 1], \"weight\": 1}]}]}";
        let parsed = parse_profile(chains, 2).unwrap();
        assert!(matches!(parsed[0], EngineStrategy::Chains(_)));
        assert!(parse_profile("{\"strategies\": [{\"probs\": [0.5, 0.6]}]}", 2).is_err());
    }
}
