//! Service configuration: a TOML file with environment overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;

/// Environment variables that override file settings.
pub const ENV_BIND: &str = "REPOLICY_BIND";
pub const ENV_DATA_DIR: &str = "REPOLICY_DATA_DIR";
pub const ENV_POLICY: &str = "REPOLICY_POLICY";
pub const ENV_DOMAINS: &str = "REPOLICY_DOMAINS";
pub const ENV_TAXONOMY: &str = "REPOLICY_TAXONOMY";
pub const ENV_API_TOKEN: &str = "REPOLICY_API_TOKEN";

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bind: String,
    pub data_dir: PathBuf,
    /// Policy manifest path, or the id of a shipped policy.
    pub policy: String,
    /// Domain pack directories or shipped domain ids.
    pub domains: Vec<String>,
    /// Taxonomy file; the shipped sample when unset.
    pub taxonomy: Option<PathBuf>,
    /// Purpose profile for datasets that have none of their own; the
    /// shipped sample when both this and `taxonomy` are unset.
    pub purpose_profile: Option<PathBuf>,
    pub bound: usize,
    /// When set, every request but `/health` needs `Authorization: Bearer <token>`.
    pub api_token: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            bind: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("repolicy-data"),
            policy: "ferpaOnly".into(),
            domains: vec!["ferpa".into(), "cmr".into()],
            taxonomy: None,
            purpose_profile: None,
            bound: 9,
            api_token: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads `path` (defaults when `None`) and applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Config, ConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError::Read { path: p.display().to_string(), message: e.to_string() })?;
                Config::parse(&text)
                    .map_err(|e| ConfigError::Parse { path: p.display().to_string(), message: e.to_string() })?
            }
            None => Config::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok());
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(v) = get(ENV_BIND) {
            self.bind = v;
        }
        if let Some(v) = get(ENV_DATA_DIR) {
            self.data_dir = v.into();
        }
        if let Some(v) = get(ENV_POLICY) {
            self.policy = v;
        }
        if let Some(v) = get(ENV_DOMAINS) {
            self.domains = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        }
        if let Some(v) = get(ENV_TAXONOMY) {
            self.taxonomy = Some(v.into());
        }
        if let Some(v) = get(ENV_API_TOKEN) {
            self.api_token = Some(v).filter(|t| !t.is_empty());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_env_overrides() {
        let mut cfg = Config::parse("bind = \"0.0.0.0:9000\"\nbound = 4\n").unwrap();
        assert_eq!(cfg.bind, "0.0.0.0:9000");
        assert_eq!(cfg.policy, "ferpaOnly");
        cfg.apply_env(|k| match k {
            ENV_DOMAINS => Some("ferpa, ./packs/extra".into()),
            ENV_API_TOKEN => Some("secret".into()),
            _ => None,
        });
        assert_eq!(cfg.domains, ["ferpa", "./packs/extra"]);
        assert_eq!(cfg.api_token.as_deref(), Some("secret"));
        assert_eq!(cfg.bound, 4);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("prot = 1").is_err());
    }
}
