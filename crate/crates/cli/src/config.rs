//! Flat `key = value` run configuration.
//!
//! ```text
//! # comment
//! graph = synthetic:10000,4     # or a path to an edge list
//! graph_seed = 2024             # synthetic graphs only; defaults to --seed
//! num_seeds = 100
//! max_hops = 6
//! max_chain_len = 20
//! prevalence.pol = 0.66
//! prevalence.tech = 0.68
//! prevalence.movie = 0.58
//! prevalence.research = 0.50
//! fan_in_cap = none
//! clamp_trust = true
//! credibility_model = uniform   # or oracle
//! ```
//!
//! `[section]` lines and lines starting with `#` or `;` are ignored. Unknown
//! keys are rejected.

use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;
use veritas_core::sim::{CredibilityModel, SimConfig};
use veritas_core::{GraphSource, Topic};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {reason}")]
    BadValue { line: usize, key: String, reason: String },
    #[error("no graph given (set `graph` or pass --graph)")]
    MissingGraph,
    #[error("{0}")]
    Invalid(String),
}

/// Graph reference before a seed is attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    File(PathBuf),
    Synthetic { n: usize, m: usize },
}

impl FromStr for GraphSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_prefix("synthetic:") {
            Some(rest) => {
                let (n, m) = rest
                    .split_once(',')
                    .ok_or_else(|| format!("expected synthetic:n,m, got {s:?}"))?;
                let n = n.trim().parse().map_err(|e| format!("bad n: {e}"))?;
                let m = m.trim().parse().map_err(|e| format!("bad m: {e}"))?;
                Ok(GraphSpec::Synthetic { n, m })
            }
            None if s.is_empty() => Err("empty graph path".into()),
            None => Ok(GraphSpec::File(PathBuf::from(s))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub graph: Option<GraphSpec>,
    pub graph_seed: Option<u64>,
    pub num_seeds: usize,
    pub max_hops: usize,
    pub max_chain_len: usize,
    pub prevalence: [f64; 4],
    pub fan_in_cap: Option<usize>,
    pub clamp_trust: bool,
    pub credibility_model: CredibilityModel,
}

impl Default for RunConfig {
    fn default() -> Self {
        let defaults = SimConfig::new(GraphSource::SyntheticScaleFree { n: 2, m: 1, seed: 0 }, 0);
        RunConfig {
            graph: None,
            graph_seed: None,
            num_seeds: defaults.num_seeds,
            max_hops: defaults.max_hops,
            max_chain_len: defaults.max_chain_len,
            prevalence: defaults.topic_prevalence.0,
            fan_in_cap: defaults.fan_in_cap,
            clamp_trust: defaults.clamp_trust,
            credibility_model: defaults.credibility_model,
        }
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        line,
        key: key.to_string(),
        reason: e.to_string(),
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split_once(" #").map_or(raw, |(head, _)| head).trim();
            if content.is_empty() || content.starts_with('#') || content.starts_with(';') || content.starts_with('[') {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "graph" => cfg.graph = Some(parse_value(line, key, value)?),
                "graph_seed" => cfg.graph_seed = Some(parse_value(line, key, value)?),
                "num_seeds" => cfg.num_seeds = parse_value(line, key, value)?,
                "max_hops" => cfg.max_hops = parse_value(line, key, value)?,
                "max_chain_len" => cfg.max_chain_len = parse_value(line, key, value)?,
                "fan_in_cap" => {
                    cfg.fan_in_cap = match value {
                        "none" | "" => None,
                        v => Some(parse_value(line, key, v)?),
                    }
                }
                "clamp_trust" => cfg.clamp_trust = parse_value(line, key, value)?,
                "credibility_model" => {
                    cfg.credibility_model = match value {
                        "uniform" => CredibilityModel::Uniform,
                        "oracle" => CredibilityModel::Oracle,
                        other => {
                            return Err(ConfigError::BadValue {
                                line,
                                key: key.into(),
                                reason: format!("expected uniform or oracle, got {other:?}"),
                            })
                        }
                    }
                }
                _ => match key.strip_prefix("prevalence.").map(Topic::from_str) {
                    Some(Ok(topic)) => cfg.prevalence[topic as usize] = parse_value(line, key, value)?,
                    _ => return Err(ConfigError::UnknownKey { line, key: key.into() }),
                },
            }
        }
        Ok(cfg)
    }

    /// Resolves against the root seed and an optional `--graph` override.
    pub fn to_sim_config(&self, seed: u64, graph_override: Option<&GraphSpec>) -> Result<SimConfig, ConfigError> {
        let graph = graph_override
            .or(self.graph.as_ref())
            .ok_or(ConfigError::MissingGraph)?;
        let graph_source = match graph {
            GraphSpec::File(path) => GraphSource::EdgeListFile(path.clone()),
            GraphSpec::Synthetic { n, m } => GraphSource::SyntheticScaleFree {
                n: *n,
                m: *m,
                seed: self.graph_seed.unwrap_or(seed),
            },
        };
        let mut sim = SimConfig::new(graph_source, seed);
        sim.num_seeds = self.num_seeds;
        sim.max_hops = self.max_hops;
        sim.max_chain_len = self.max_chain_len;
        sim.topic_prevalence.0 = self.prevalence;
        sim.fan_in_cap = self.fan_in_cap;
        sim.clamp_trust = self.clamp_trust;
        sim.credibility_model = self.credibility_model;
        sim.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(sim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "\
# calibrated
[run]
graph = synthetic:1000,3
graph_seed = 9
num_seeds = 50   # half
max_hops = 4
max_chain_len = 12
prevalence.pol = 0.5
prevalence.Research = 0.25
fan_in_cap = 8
clamp_trust = false
credibility_model = oracle
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.graph, Some(GraphSpec::Synthetic { n: 1000, m: 3 }));
        assert_eq!(cfg.num_seeds, 50);
        assert_eq!(cfg.prevalence, [0.5, 0.68, 0.58, 0.25]);
        assert_eq!(cfg.fan_in_cap, Some(8));
        assert!(!cfg.clamp_trust);
        let sim = cfg.to_sim_config(1, None).unwrap();
        assert_eq!(
            sim.graph_source,
            GraphSource::SyntheticScaleFree { n: 1000, m: 3, seed: 9 }
        );
        assert_eq!(sim.seed, 1);
        assert_eq!(sim.credibility_model, CredibilityModel::Oracle);
    }

    #[test]
    fn defaults_and_override() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.to_sim_config(1, None), Err(ConfigError::MissingGraph));
        let sim = cfg.to_sim_config(5, Some(&"edges.txt".parse().unwrap())).unwrap();
        assert_eq!(sim.graph_source, GraphSource::EdgeListFile("edges.txt".into()));
        assert_eq!((sim.num_seeds, sim.max_hops, sim.max_chain_len), (100, 6, 20));
        let sim = cfg.to_sim_config(5, Some(&"synthetic:30,2".parse().unwrap())).unwrap();
        assert_eq!(
            sim.graph_source,
            GraphSource::SyntheticScaleFree { n: 30, m: 2, seed: 5 }
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(RunConfig::parse("graph\n"), Err(ConfigError::Syntax { line: 1 }));
        assert!(matches!(
            RunConfig::parse("\nbogus = 1"),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::parse("max_hops = -1"),
            Err(ConfigError::BadValue { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse("prevalence.sports = 0.1"),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(matches!(
            RunConfig::parse("graph = synthetic:10"),
            Err(ConfigError::BadValue { .. })
        ));
        let cfg = RunConfig::parse("graph = synthetic:10,2\nmax_hops = 0").unwrap();
        assert!(matches!(cfg.to_sim_config(0, None), Err(ConfigError::Invalid(_))));
    }
}
