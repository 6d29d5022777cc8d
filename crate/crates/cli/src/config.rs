//! Run configuration: one TOML file, overridden by command-line flags.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use t4d_harness::{BackendConfig, DEFAULT_FAILURE_THRESHOLD};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub generate: GenerateSection,
    pub convert: ConvertSection,
    pub eval: EvalSection,
    #[serde(rename = "backend")]
    pub backends: Vec<BackendConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub family: Option<String>,
    pub count: Option<usize>,
    pub distractor_characters: Option<usize>,
    pub distractor_preferences: Option<usize>,
    pub true_belief_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvertSection {
    pub hints: Vec<String>,
    pub tom_hint_scope: Option<String>,
    pub tomi: bool,
    pub shuffle_options: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub strategies: Vec<String>,
    pub backends: Vec<String>,
    pub parallelism: usize,
    pub failure_threshold: f64,
    pub cache_dir: Option<String>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            strategies: vec!["far".into()],
            backends: vec!["mock:gold".into()],
            parallelism: 4,
            failure_threshold: DEFAULT_FAILURE_THRESHOLD,
            cache_dir: None,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Config::default()) };
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: Config = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for b in &cfg.backends {
            b.validate()?;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg: Config = toml::from_str(
            r#"
            seed = 7
            [generate]
            family = "d3"
            count = 100
            [convert]
            hints = ["tom"]
            [eval]
            strategies = ["far", "cot"]
            backends = ["gpt"]
            parallelism = 2
            failure_threshold = 0.2
            cache_dir = "cache"
            [[backend]]
            name = "gpt"
            endpoint_url = "https://api.example.com/v1/chat/completions"
            model_id = "some-model"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.backends[0].max_tokens, 800);
        assert_eq!(cfg.backends[0].temperature, 0.0);
        assert_eq!(cfg.eval.parallelism, 2);
        assert!(toml::from_str::<Config>("bogus = 1").is_err());
    }
}
