//! JSON run configuration shared by the command-line pipelines.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backtest::TRADING_DAY;
use crate::gmm::{selection_from_one_based, GmmMode, GmmSettings, NwWeights};
use crate::model::ModelParams;
use crate::pde::GridSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: Option<ModelParams>,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub backtest: BacktestConfig,
    #[serde(default)]
    pub gmm: GmmConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestConfig {
    pub w0: f64,
    pub dt: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            w0: 1.0,
            dt: TRADING_DAY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GmmConfig {
    pub mode: GmmMode,
    pub nw_lag: Option<usize>,
    pub nw_weights: NwWeights,
    /// 1-based moment numbers for just-identified mode.
    pub selection: Option<Vec<usize>>,
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self {
            mode: GmmMode::JustIdentified,
            nw_lag: None,
            nw_weights: NwWeights::Paper,
            selection: None,
            seed: 0,
        }
    }
}

impl GmmConfig {
    pub fn settings(&self) -> Result<GmmSettings> {
        let mut s = GmmSettings {
            mode: self.mode,
            nw_lag: self.nw_lag,
            nw_weights: self.nw_weights,
            seed: self.seed,
            ..GmmSettings::default()
        };
        if let Some(sel) = &self.selection {
            s.selection = selection_from_one_based(sel)?;
        }
        Ok(s)
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Parse {
                path: path.display().to_string(),
                line: j.line(),
                message: j.to_string(),
            },
            other => other,
        })
    }

    /// The validated `model` section.
    pub fn model(&self) -> Result<ModelParams> {
        self.model
            .ok_or_else(|| Error::InvalidInput("config has no `model` section".into()))?
            .validated()
    }

    pub fn grid(&self) -> Result<GridSpec> {
        self.grid
            .ok_or_else(|| Error::InvalidInput("config has no `grid` section".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_parses() {
        let model = serde_json::to_value(ModelParams::reference()).unwrap();
        let text = serde_json::json!({
            "model": model,
            "grid": {"xmin": 1.0, "xmax": 5.0, "ymin": 1.0, "ymax": 5.0, "I": 41, "J": 41, "K": 251},
            "backtest": {"w0": 100.0},
            "gmm": {"mode": "two-step", "nw_lag": 4, "nw_weights": "standard", "selection": [1, 2, 17], "seed": 9}
        })
        .to_string();
        let c = Config::from_json(&text).unwrap();
        assert_eq!(c.model().unwrap(), ModelParams::reference());
        assert_eq!(c.grid().unwrap().nk, 251);
        assert_eq!(c.backtest.w0, 100.0);
        assert_eq!(c.backtest.dt, TRADING_DAY);
        let s = c.gmm.settings().unwrap();
        assert_eq!(s.mode, GmmMode::TwoStepEfficient);
        assert_eq!(s.selection, vec![0, 1, 16]);
        assert_eq!(s.nw_weights, NwWeights::Standard);
    }

    #[test]
    fn empty_and_unknown() {
        let c = Config::from_json("{}").unwrap();
        assert!(c.model().is_err());
        assert_eq!(c.gmm.mode, GmmMode::JustIdentified);
        assert!(Config::from_json(r#"{"grdi": {}}"#).is_err());
        assert!(Config::from_json(r#"{"gmm": {"mode": "just"}}"#).is_ok());
    }
}
