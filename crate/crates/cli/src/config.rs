use std::path::Path;

use anyhow::{bail, Context, Result};
use pbedg::cases::{CaseId, NormalInitial};
use pbedg::experiment::RunSpec;
use pbedg::limiter::LimiterMode;
use pbedg::timeloop::{RunConfig, TimeMethod};
use serde::{Deserialize, Serialize};

/// The JSON document accepted by `--config` and echoed into `runreport.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub case: CaseId,
    #[serde(rename = "N")]
    pub cells: usize,
    pub k: usize,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub time: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<NormalInitial>,
    /// Mesh sizes of an EOC battery. When present the run is a battery
    /// instead of a single solve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eoc_cells: Option<Vec<usize>>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

/// Optional acceptance thresholds. The exit code is nonzero iff one fails.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_e_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_e_hd: Option<f64>,
    /// Allowed range of the finest-pair EOC of `e_h`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eoc_h: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eoc_hd: Option<[f64; 2]>,
    /// Bound on every moment error that has a reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_moment_error: Option<f64>,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            case: CaseId::SumAgg,
            cells: 30,
            k: 1,
            order: None,
            time: RunConfig::new(0.01, 1e-5),
            normal: None,
            eoc_cells: None,
            thresholds: Thresholds::default(),
        }
    }
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Parses a config, reporting the offending field path on schema errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("at `{path}`: {}", e.into_inner())
        })
    }

    pub fn spec(&self, cells: usize) -> RunSpec {
        RunSpec {
            order: self.order,
            normal: self.normal,
            ..RunSpec::new(self.case, cells, self.k, self.time.clone())
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.time.validate()?;
        if let Some(cells) = &self.eoc_cells {
            if cells.len() < 2 {
                bail!("eoc_cells needs at least two mesh sizes");
            }
        }
        Ok(())
    }
}

/// `on`, `off`, or a limiter mode name.
pub fn parse_limiter(s: &str) -> Result<Option<LimiterMode>, String> {
    match s {
        "off" | "false" | "none" => Ok(None),
        "on" | "true" | "gauss_only" => Ok(Some(LimiterMode::GaussOnly)),
        "full" => Ok(Some(LimiterMode::Full)),
        other => Err(format!("unknown limiter setting '{other}' (expected on, off, gauss_only or full)")),
    }
}

pub fn parse_method(s: &str) -> Result<TimeMethod, String> {
    s.parse().map_err(|e: pbedg::Error| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_errors_name_the_field() {
        let err = CliConfig::from_json(r#"{"case": "1b", "N": 30, "k": 1, "time": {"t_end": 1, "dt": "x"}}"#).unwrap_err();
        assert!(err.to_string().contains("time.dt"), "{err}");
        let err = CliConfig::from_json(r#"{"case": "9", "N": 30, "k": 1, "time": {"t_end": 1, "dt": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("case"), "{err}");
    }

    #[test]
    fn round_trips_through_json() {
        let c = CliConfig {
            eoc_cells: Some(vec![15, 30]),
            thresholds: Thresholds {
                eoc_h: Some([1.7, 2.3]),
                ..Default::default()
            },
            ..Default::default()
        };
        let back = CliConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn limiter_words() {
        assert_eq!(parse_limiter("off").unwrap(), None);
        assert_eq!(parse_limiter("full").unwrap(), Some(LimiterMode::Full));
        assert!(parse_limiter("maybe").is_err());
    }
}
