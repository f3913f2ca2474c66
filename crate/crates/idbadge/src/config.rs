//! Service configuration.
//!
//! ```toml
//! listen = "127.0.0.1:8080"
//!
//! [storage]
//! log_path = "data/events.jsonl"
//!
//! [consensus]
//! id_consensus_min = 5
//! match_min = 5
//! dispute_min = 2
//! supermajority = "2/3"
//!
//! [tags]
//! required = ["photo_source", "coat_color"]
//!
//! [face_rec]
//! fixture = "face_rec.toml"
//! ```

use std::path::{Path, PathBuf};

use idbadge_core::{ConsensusConfig, EngineConfig, TagPolicy};
use serde::Deserialize;

/// Environment variable naming the config file.
pub const CONFIG_ENV: &str = "IDBADGE_CONFIG";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub listen: String,
    pub storage: StorageConfig,
    pub consensus: ConsensusConfig,
    pub tags: TagsConfig,
    pub face_rec: FaceRecConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            listen: "127.0.0.1:8080".into(),
            storage: StorageConfig::default(),
            consensus: ConsensusConfig::default(),
            tags: TagsConfig::default(),
            face_rec: FaceRecConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StorageConfig {
    pub log_path: PathBuf,
}

impl Default for StorageConfig {
    fn default() -> Self {
        StorageConfig { log_path: "data/events.jsonl".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TagsConfig {
    pub required: Vec<String>,
}

impl Default for TagsConfig {
    fn default() -> Self {
        TagsConfig { required: TagPolicy::default().required.into_iter().collect() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaceRecConfig {
    /// Lookup table for the fixture provider; the stub is used when absent.
    pub fixture: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: invalid value for `{key}`")]
    Invalid { path: PathBuf, key: String },
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg = Config::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.into(), message },
            ConfigError::Invalid { key, .. } => ConfigError::Invalid { path: path.into(), key },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.storage.log_path = base.join(&cfg.storage.log_path);
        cfg.face_rec.fixture = cfg.face_rec.fixture.map(|f| base.join(f));
        Ok(cfg)
    }

    /// Parses and validates; relative paths are left as written.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: PathBuf::new(), message: e.to_string() })?;
        let invalid = |key: &str| ConfigError::Invalid { path: PathBuf::new(), key: key.into() };
        cfg.consensus.validate().map_err(|e| invalid(&format!("consensus.{}", e.key)))?;
        if cfg.listen.parse::<std::net::SocketAddr>().is_err() {
            return Err(invalid("listen"));
        }
        if cfg.tags.required.iter().any(|k| k.trim().is_empty()) {
            return Err(invalid("tags.required"));
        }
        Ok(cfg)
    }

    pub fn engine(&self) -> EngineConfig {
        EngineConfig { consensus: self.consensus, tag_policy: TagPolicy::new(self.tags.required.iter()) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use idbadge_core::Ratio;

    #[test]
    fn defaults_match_engine_defaults() {
        let cfg = Config::parse("").unwrap();
        assert_eq!(cfg.engine(), EngineConfig::default());
    }

    #[test]
    fn full_file() {
        let cfg = Config::parse(
            "listen = \"0.0.0.0:9000\"\n[storage]\nlog_path = \"x.jsonl\"\n\
             [consensus]\nid_consensus_min = 3\nsupermajority = 0.75\n[tags]\nrequired = [\"coat_color\"]\n",
        )
        .unwrap();
        assert_eq!(cfg.consensus.id_consensus_min, 3);
        assert_eq!(cfg.consensus.supermajority, Ratio::new(3, 4).unwrap());
        assert_eq!(cfg.engine().tag_policy, TagPolicy::new(["coat_color"]));
    }

    #[test]
    fn unknown_key_is_named() {
        let err = Config::parse("[consensus]\nquorum = 4\n").unwrap_err();
        assert!(err.to_string().contains("quorum"), "{err}");
        let err = Config::parse("lisen = \"x\"\n").unwrap_err();
        assert!(err.to_string().contains("lisen"), "{err}");
    }

    #[test]
    fn invalid_values_are_named() {
        let err = Config::parse("[consensus]\nmatch_min = 0\n").unwrap_err();
        assert!(err.to_string().contains("consensus.match_min"), "{err}");
        let err = Config::parse("listen = \"nowhere\"\n").unwrap_err();
        assert!(err.to_string().contains("listen"), "{err}");
    }
}
