use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::ControlId;
use crate::classify::{ClassifyConfig, DEFAULT_CHECK_KEYWORDS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// A literal argument position that is never a buried constant, e.g. the
/// digits argument of ROUND.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExemptArg {
    pub function: String,
    /// 1-based argument position.
    pub arg: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waiver {
    /// Glob matched against the file's path or its file name.
    pub file: String,
    pub control: ControlId,
    pub sub_rule: String,
    pub justification: String,
}

impl Waiver {
    pub fn matches_file(&self, path: &str) -> bool {
        let Ok(pattern) = glob::Pattern::new(&self.file) else {
            return false;
        };
        let name = Path::new(path)
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        pattern.matches(path) || pattern.matches(&name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    pub constant_whitelist: Vec<f64>,
    pub exempt_function_args: Vec<ExemptArg>,
    pub max_buried_constants: usize,
    pub check_keywords: Vec<String>,
    pub label_distance: u32,
    pub header_label_threshold: f64,
    pub style_family_threshold: f64,
    pub orphan_label_only: bool,
    pub orphan_fails_verdict: bool,
    pub waivers: Vec<Waiver>,
}

impl Default for ControlConfig {
    fn default() -> Self {
        let exempt = [
            ("ROUND", 2),
            ("ROUNDUP", 2),
            ("ROUNDDOWN", 2),
            ("TRUNC", 2),
            ("VLOOKUP", 3),
            ("HLOOKUP", 3),
            ("MATCH", 3),
            ("INDEX", 2),
            ("INDEX", 3),
        ];
        let classify = ClassifyConfig::default();
        ControlConfig {
            constant_whitelist: vec![-1.0, 0.0, 1.0],
            exempt_function_args: exempt
                .iter()
                .map(|&(f, arg)| ExemptArg {
                    function: f.to_string(),
                    arg,
                })
                .collect(),
            max_buried_constants: 0,
            check_keywords: DEFAULT_CHECK_KEYWORDS.iter().map(|s| s.to_string()).collect(),
            label_distance: classify.label_distance,
            header_label_threshold: classify.header_label_threshold,
            style_family_threshold: classify.style_family_threshold,
            orphan_label_only: classify.orphan_label_only,
            orphan_fails_verdict: true,
            waivers: Vec::new(),
        }
    }
}

impl ControlConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: ControlConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if let Some(v) = self.constant_whitelist.iter().find(|v| !v.is_finite()) {
            return bad(format!("whitelist value {v} is not finite"));
        }
        for (name, t) in [
            ("header_label_threshold", self.header_label_threshold),
            ("style_family_threshold", self.style_family_threshold),
        ] {
            if !(t > 0.0 && t <= 1.0) {
                return bad(format!("{name} must be in (0, 1], got {t}"));
            }
        }
        if let Some(e) = self.exempt_function_args.iter().find(|e| e.arg == 0) {
            return bad(format!("exempt argument positions are 1-based ({})", e.function));
        }
        for w in &self.waivers {
            if w.justification.trim().is_empty() {
                return bad(format!("waiver for {} has no justification", w.file));
            }
            if !w.control.sub_rules().contains(&w.sub_rule.as_str()) {
                return bad(format!(
                    "unknown sub-rule '{}' for {} (expected one of: {})",
                    w.sub_rule,
                    w.control.key(),
                    w.control.sub_rules().join(", ")
                ));
            }
            if let Err(e) = glob::Pattern::new(&w.file) {
                return bad(format!("bad waiver file pattern '{}': {e}", w.file));
            }
        }
        Ok(())
    }

    pub fn classify(&self) -> ClassifyConfig {
        ClassifyConfig {
            check_keywords: self.check_keywords.clone(),
            label_distance: self.label_distance,
            header_label_threshold: self.header_label_threshold,
            style_family_threshold: self.style_family_threshold,
            orphan_label_only: self.orphan_label_only,
        }
    }

    pub fn is_exempt(&self, function: &str, arg: usize) -> bool {
        self.exempt_function_args
            .iter()
            .any(|e| e.arg == arg && e.function.eq_ignore_ascii_case(function))
    }

    pub fn is_whitelisted(&self, value: f64) -> bool {
        self.constant_whitelist.contains(&value)
    }

    /// The waiver covering this file, control and sub-rule, if any.
    pub fn waiver(&self, path: &str, control: ControlId, sub_rule: &str) -> Option<&Waiver> {
        self.waivers
            .iter()
            .find(|w| w.control == control && w.sub_rule == sub_rule && w.matches_file(path))
    }

    /// SHA-256 of the canonical JSON form, identifying the rules a report
    /// was produced under.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }
}
