//! Pipeline configuration: one TOML file, overridden field by field from the command line.

use std::path::{Path, PathBuf};

use emobalance_core::bias::BiasConfig;
use emobalance_core::corpus::ColumnMapping;
use emobalance_core::selector::{SelectorConfig, DEFAULT_REQUIRED_SUBMISSIONS};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub annotations: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceParams {
    pub host: String,
    pub port: u16,
    pub image_dir: Option<PathBuf>,
    pub ui_dir: Option<PathBuf>,
    pub required_submissions: u32,
    pub lease_minutes: u64,
    pub grace_minutes: u64,
}

impl Default for ServiceParams {
    fn default() -> Self {
        ServiceParams {
            host: "127.0.0.1".into(),
            port: 8080,
            image_dir: None,
            ui_dir: None,
            required_submissions: DEFAULT_REQUIRED_SUBMISSIONS,
            lease_minutes: 30,
            grace_minutes: 5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub columns: ColumnMapping,
    pub selector: SelectorConfig,
    pub bias: BiasConfig,
    pub service: ServiceParams,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else { return Ok(PipelineConfig::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.selector.validate()?;
        if self.service.required_submissions == 0 {
            return Err(CliError::Validation("service.required_submissions must be positive".into()));
        }
        if self.service.lease_minutes == 0 {
            return Err(CliError::Validation("service.lease_minutes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.bias.threshold) {
            return Err(CliError::Validation(format!("bias.threshold {} outside [0, 1]", self.bias.threshold)));
        }
        if self.bias.ratio_k_min == 0 || self.bias.ratio_k_min > self.bias.ratio_k_max {
            return Err(CliError::Validation("bias.ratio_k_min must be in 1..=ratio_k_max".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: PipelineConfig = toml::from_str("seed = 7\n[selector]\nthreshold = 0.5\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.selector.threshold, 0.5);
        assert_eq!(cfg.selector.neighbors, 100);
        assert_eq!(cfg.service.required_submissions, 5);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<PipelineConfig>("[selector]\nneighbours = 3\n").is_err());
    }

    #[test]
    fn bad_counts_fail_validation() {
        let mut cfg = PipelineConfig::default();
        cfg.selector.neighbors = 10;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.service.required_submissions = 0;
        assert!(cfg.validate().is_err());
    }
}
