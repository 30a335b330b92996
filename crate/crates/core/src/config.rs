//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "models": [
//!     { "id": "close", "family": "bernoulli", "means": [0.9, 0.8] },
//!     { "id": "gauss", "family": "gaussian", "sigma2": 1.0, "means": [0.0, 0.5],
//!       "bounds": { "mu_minus": -1.0, "mu_plus": 1.0 } }
//!   ],
//!   "policies": ["klucb++", { "name": "moss" }],
//!   "horizons": [1000, 10000],
//!   "replications": 100,
//!   "master_seed": 7,
//!   "output_dir": "out",
//!   "action_log": "auto",
//!   "execution": "parallel"
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exp_family::{ArmDistribution, BanditModel, Family, FamilyBounds, FamilyKind};
use crate::policies::PolicyKind;
use crate::simulator::{ActionLog, Execution, ExperimentPlan, NamedModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub mu_minus: f64,
    pub mu_plus: f64,
    /// Defaults to the family variance bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub id: String,
    pub family: FamilyKind,
    pub means: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSpec>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<BanditModel<f64>> {
        let family = match (self.family, self.sigma2) {
            (FamilyKind::Bernoulli, None) => Family::Bernoulli,
            (FamilyKind::Bernoulli, Some(_)) => {
                return Err(Error::Config(format!("model {:?}: sigma2 is only valid for gaussian arms", self.id)))
            }
            (FamilyKind::GaussianKnownVariance, Some(s2)) => Family::gaussian(s2)?,
            (FamilyKind::GaussianKnownVariance, None) => {
                return Err(Error::Config(format!("model {:?}: gaussian arms need sigma2", self.id)))
            }
        };
        let arms = self
            .means
            .iter()
            .map(|&m| ArmDistribution::new(family, m))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Config(format!("model {:?}: {e}", self.id)))?;
        let model = match &self.bounds {
            None => BanditModel::new(arms),
            Some(b) => {
                let v = b.variance.unwrap_or_else(|| family.default_variance());
                BanditModel::with_bounds(arms, FamilyBounds::new(b.mu_minus, b.mu_plus, v)?)
            }
        };
        model.map_err(|e| Error::Config(format!("model {:?}: {e}", self.id)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicyEntry {
    Name(PolicyKind),
    Spec { name: PolicyKind },
}

impl PolicyEntry {
    pub fn kind(&self) -> PolicyKind {
        match *self {
            PolicyEntry::Name(k) | PolicyEntry::Spec { name: k } => k,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionLogSetting {
    #[default]
    Auto,
    Always,
    Never,
}

impl From<ActionLogSetting> for ActionLog {
    fn from(s: ActionLogSetting) -> Self {
        match s {
            ActionLogSetting::Auto => ActionLog::Auto,
            ActionLogSetting::Always => ActionLog::Always,
            ActionLogSetting::Never => ActionLog::Never,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionSetting {
    Serial,
    #[default]
    Parallel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub models: Vec<ModelSpec>,
    pub policies: Vec<PolicyEntry>,
    pub horizons: Vec<u64>,
    pub replications: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub action_log: ActionLogSetting,
    #[serde(default)]
    pub execution: ExecutionSetting,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Parses a config document; syntax and type errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn execution(&self) -> Execution {
        match self.execution {
            ExecutionSetting::Serial => Execution::Serial,
            ExecutionSetting::Parallel => Execution::Parallel(None),
        }
    }

    /// Builds and validates the simulator plan.
    pub fn plan(&self) -> Result<ExperimentPlan<f64>> {
        let mut seen = std::collections::HashSet::new();
        let models = self
            .models
            .iter()
            .map(|m| {
                if !seen.insert(m.id.as_str()) {
                    return Err(Error::Config(format!("duplicate model id {:?}", m.id)));
                }
                Ok(NamedModel {
                    id: m.id.clone(),
                    model: m.build()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let plan = ExperimentPlan {
            models,
            policies: self.policies.iter().map(PolicyEntry::kind).collect(),
            horizons: self.horizons.clone(),
            replications: self.replications,
            master_seed: self.master_seed,
            action_log: self.action_log.into(),
            keep_traces: true,
        };
        plan.validate()?;
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": 1,
        "models": [{ "id": "m", "family": "bernoulli", "means": [0.9, 0.8] }],
        "policies": ["klucb++"],
        "horizons": [100],
        "replications": 1
    }"#;

    #[test]
    fn minimal_config_builds() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
        assert_eq!(cfg.execution, ExecutionSetting::Parallel);
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.cells().len(), 1);
        assert_eq!(plan.policies, vec![PolicyKind::KlUcbPlusPlus]);
    }

    #[test]
    fn policy_entries_accept_both_forms() {
        let text = MINIMAL.replace(r#"["klucb++"]"#, r#"["ucb1", {"name": "moss"}, "kl-ucb"]"#);
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        let kinds: Vec<_> = cfg.policies.iter().map(PolicyEntry::kind).collect();
        assert_eq!(kinds, vec![PolicyKind::Ucb1, PolicyKind::Moss, PolicyKind::KlUcb]);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = MINIMAL.replace("\"horizons\": [100]", "\"horizons\": [100,]");
        let err = ExperimentConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("line 5"), "{err}");
    }

    #[test]
    fn semantic_errors() {
        let zero = MINIMAL.replace("\"replications\": 1", "\"replications\": 0");
        assert!(ExperimentConfig::from_json(&zero).unwrap().plan().is_err());
        let short = MINIMAL.replace("[100]", "[1]");
        assert!(ExperimentConfig::from_json(&short).unwrap().plan().is_err());
        let schema = MINIMAL.replace("\"schema\": 1", "\"schema\": 2");
        assert!(ExperimentConfig::from_json(&schema).is_err());
        let gauss = MINIMAL.replace("\"bernoulli\"", "\"gaussian\"");
        assert!(ExperimentConfig::from_json(&gauss).unwrap().plan().is_err());
        let unknown = MINIMAL.replace("\"klucb++\"", "\"thompson\"");
        assert!(ExperimentConfig::from_json(&unknown).is_err());
        let bad_mean = MINIMAL.replace("0.8]", "1.8]");
        assert!(ExperimentConfig::from_json(&bad_mean).unwrap().plan().is_err());
    }

    #[test]
    fn gaussian_with_bounds() {
        let text = r#"{
            "schema": 1,
            "models": [{ "id": "g", "family": "gaussian", "sigma2": 2.0, "means": [0.0, 0.5],
                         "bounds": { "mu_minus": -1.0, "mu_plus": 1.0 } }],
            "policies": ["moss"], "horizons": [10], "replications": 2, "execution": "serial"
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let plan = cfg.plan().unwrap();
        let b = plan.models[0].model.bounds();
        assert_eq!((b.mu_minus, b.mu_plus, b.variance), (-1.0, 1.0, 2.0));
        assert_eq!(cfg.execution(), Execution::Serial);
    }
}
