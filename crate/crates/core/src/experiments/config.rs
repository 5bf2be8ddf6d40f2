use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::{Domain, DomainSpec};
use crate::error::{QhError, Result};
use crate::maps::MapSpec;

/// The experiment pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    BoundsSuite,
    HalfspaceValidation,
    Subinvariance,
    SlitCounterexample,
    ShortArcImage,
    ChainSuite,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::BoundsSuite,
        ExperimentName::HalfspaceValidation,
        ExperimentName::Subinvariance,
        ExperimentName::SlitCounterexample,
        ExperimentName::ShortArcImage,
        ExperimentName::ChainSuite,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::BoundsSuite => "bounds-suite",
            ExperimentName::HalfspaceValidation => "halfspace-validation",
            ExperimentName::Subinvariance => "subinvariance",
            ExperimentName::SlitCounterexample => "slit-counterexample",
            ExperimentName::ShortArcImage => "short-arc-image",
            ExperimentName::ChainSuite => "chain-suite",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            ExperimentName::BoundsSuite => {
                "growth bounds, near-pair brackets, short-arc length and uniform-domain bounds on sampled pairs"
            }
            ExperimentName::HalfspaceValidation => "short-arc upper bounds against the exact half-space metric",
            ExperimentName::Subinvariance => "uniformity of the image of a subdomain at two resolutions",
            ExperimentName::SlitCounterexample => "quasiconvexity blow-up and bounded John constant in a slit disk",
            ExperimentName::ShortArcImage => "diameter of images of short arcs under a disk automorphism",
            ExperimentName::ChainSuite => "chain point counts on arcs with bounded length",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative quadrature tolerance.
    pub quad_tol: f64,
    /// Multiplicative slack on checked inequalities.
    pub slack_mult: f64,
    /// Additive slack on checked inequalities.
    pub slack_add: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { quad_tol: 1e-8, slack_mult: 1.05, slack_add: 1e-6 }
    }
}

impl Tolerances {
    /// `a ≤ b` up to slack.
    pub fn le(&self, a: f64, b: f64) -> bool {
        a <= b * self.slack_mult + self.slack_add
    }
}

fn default_resolution() -> f64 {
    0.05
}

fn default_budget() -> f64 {
    120.0
}

/// A runnable experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: ExperimentName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Wall-time budget in seconds.
    #[serde(default = "default_budget")]
    pub budget_secs: f64,
    /// Experiment-specific parameters.
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub params: Value,
}

impl ExperimentConfig {
    pub fn new(name: ExperimentName, samples: usize) -> Self {
        ExperimentConfig {
            name,
            domain: None,
            map: None,
            resolution: default_resolution(),
            samples,
            seed: 0,
            tolerances: Tolerances::default(),
            budget_secs: default_budget(),
            params: Value::Null,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| QhError::Config(format!("invalid experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| QhError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(QhError::Config(m));
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad(format!("resolution {} must be positive", self.resolution));
        }
        if !(self.budget_secs > 0.0) {
            return bad(format!("budget_secs {} must be positive", self.budget_secs));
        }
        let t = &self.tolerances;
        if !(t.quad_tol > 0.0 && t.quad_tol <= 1e-2) {
            return bad(format!("quad_tol {} must lie in (0, 0.01]", t.quad_tol));
        }
        if !(t.slack_mult >= 1.0 && t.slack_add >= 0.0) {
            return bad("slack_mult must be ≥ 1 and slack_add ≥ 0".into());
        }
        if !(self.params.is_null() || self.params.is_object()) {
            return bad("params must be an object".into());
        }
        if let Some(spec) = &self.domain {
            spec.build().map_err(|e| QhError::Config(format!("domain: {e}")))?;
        }
        match self.name {
            ExperimentName::BoundsSuite if self.domain.is_none() => {
                bad("bounds-suite needs a domain".into())
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn built_domain(&self) -> Result<Option<Domain>> {
        self.domain.as_ref().map(|s| s.build()).transpose()
    }

    pub(crate) fn param<T: for<'de> Deserialize<'de>>(&self, key: &str, default: T) -> Result<T> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| QhError::Config(format!("params.{key}: {e}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal() {
        let c = ExperimentConfig::from_json(r#"{"name":"chain-suite","samples":3}"#).unwrap();
        assert_eq!(c.name, ExperimentName::ChainSuite);
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn rejects_unknown_name() {
        let e = ExperimentConfig::from_json(r#"{"name":"nope","samples":3}"#).unwrap_err();
        assert!(matches!(e, QhError::Config(_)), "{e}");
    }

    #[test]
    fn rejects_bad_fields() {
        for text in [
            r#"{"name":"chain-suite","samples":0}"#,
            r#"{"name":"chain-suite","samples":1,"resolution":-1}"#,
            r#"{"name":"bounds-suite","samples":1}"#,
            r#"{"name":"chain-suite","samples":1,"domain":{"kind":"ball","params":{"radius":1}}}"#,
            r#"{"name":"chain-suite","samples":1,"bogus":1}"#,
            r#"{"name":"chain-suite","samples":1,"params":[1]}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(QhError::Config(_))), "{text}");
        }
    }

    #[test]
    fn names_round_trip() {
        for n in ExperimentName::ALL {
            let s = serde_json::to_string(&n).unwrap();
            assert_eq!(s, format!("\"{}\"", n.as_str()));
        }
    }
}
