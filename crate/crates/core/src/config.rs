//! Tunables. Every knob has an embedded default; `config --print-defaults`
//! dumps them so fixture runs are self-describing.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Packages whose public frontier methods count as framework APIs.
    pub api_package_prefixes: Vec<String>,
    /// Values whose `return` marks a guard's denial branch. Matched against
    /// the last dotted segment; `-NAME` matches a negated constant.
    pub denial_constants: Vec<String>,
    /// Calls taking a permission string literal as first argument.
    pub check_function_names: Vec<String>,
    /// Maximum acyclic paths enumerated per API before approximating.
    pub path_budget: usize,
    /// Wall-clock budget for one app's reachability walk.
    pub reach_budget_seconds: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            api_package_prefixes: vec!["android.".into()],
            denial_constants: vec!["PERMISSION_DENIED".into(), "-EPERM".into(), "UNKNOWN_ERROR".into()],
            check_function_names: vec![
                "checkCallingPermission".into(),
                "checkPermission".into(),
                "checkCallingOrSelfPermission".into(),
            ],
            path_budget: 10_000,
            reach_budget_seconds: 10.0,
        }
    }
}

impl AnalysisConfig {
    pub fn is_api_package(&self, owner: &str) -> bool {
        self.api_package_prefixes.iter().any(|p| owner.starts_with(p.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Full run configuration: paths from flags plus analysis tunables (the
/// latter are what `--config FILE` supplies).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub corpus_dir: Option<PathBuf>,
    pub app_dirs: Vec<PathBuf>,
    pub map_path: Option<PathBuf>,
    pub permdb_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub per_path: bool,
    pub debug_dump: Option<PathBuf>,
    pub fail_on_findings: bool,
    pub analysis: AnalysisConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<AnalysisConfig>(r#"{"path_budgt": 3}"#).is_err());
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let c: AnalysisConfig = serde_json::from_str(r#"{"path_budget": 3}"#).unwrap();
        assert_eq!(c.path_budget, 3);
        assert_eq!(c.api_package_prefixes, vec!["android.".to_string()]);
    }
}
