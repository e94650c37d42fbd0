//! Experiment configuration and its resolution against the built-in cases.

use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use spr_kinetics::cases::{self, CaseStudy};
use spr_kinetics::kinetics::{KineticParameters, TimeGrid};
use spr_kinetics::optics::OpticalStack;
use spr_kinetics::probes::{ProbeSpec, ScenarioMode, SensingScenario};

pub const DEFAULT_SETS: usize = 200;
pub const PAPER_FIDELITY_SETS: usize = 1500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweeps {
    pub n: Vec<f64>,
    /// Defaults to the case's shots per time point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<u64>>,
    pub m: Vec<usize>,
}

/// Grids of the mid-point enhancement maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapGrid {
    pub t: Vec<f64>,
    pub n: Vec<f64>,
}

impl Default for MapGrid {
    fn default() -> Self {
        MapGrid {
            t: (1..100).map(|i| i as f64 / 100.0).collect(),
            n: (0..=12)
                .map(|i| 10f64.powf(1.0 + 0.25 * i as f64))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: ScenarioMode,
    #[serde(default = "unit")]
    pub eta_a: f64,
    /// Optimized scenario only; defaults to the case's mid-point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_mid: Option<f64>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `kausaite2007`, `lahiri1999` or `custom`.
    pub case: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack: Option<OpticalStack>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinetics: Option<KineticParameters>,
    /// Angular plateau A_∞ in degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<TimeGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linearize: Option<bool>,
    pub scenario: ScenarioConfig,
    pub states: Vec<ProbeSpec>,
    pub sweeps: Sweeps,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapGrid>,
}

impl ExperimentConfig {
    /// Reads either a bare configuration or a manifest written by `run`.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).context("config is not valid JSON")?;
        let value = match value.get("config") {
            Some(inner) if value.get("schema_version").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(value).context("config does not match the experiment schema")
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.states.is_empty(), "config lists no probe states");
        for (i, a) in self.states.iter().enumerate() {
            ensure!(
                self.states[i + 1..].iter().all(|b| b.kind != a.kind),
                "state {} is listed twice",
                a.kind
            );
        }
        ensure!(!self.sweeps.n.is_empty(), "sweep over N is empty");
        ensure!(!self.sweeps.m.is_empty(), "sweep over m is empty");
        ensure!(
            self.sweeps.n.iter().all(|&n| n > 0.0 && n.is_finite()),
            "N values must be positive"
        );
        ensure!(
            self.sweeps.m.iter().all(|&m| m > 0),
            "m values must be at least 1"
        );
        if let Some(nu) = &self.sweeps.nu {
            ensure!(!nu.is_empty(), "sweep over nu is empty");
            ensure!(nu.iter().all(|&v| v > 0), "nu values must be at least 1");
        }
        if let Some(p) = self.p {
            ensure!(p > 0, "p must be at least 1");
        }
        if let Some(map) = &self.map {
            ensure!(
                !map.t.is_empty() && !map.n.is_empty(),
                "map grids must be nonempty"
            );
        }
        Ok(())
    }

    pub fn resolve_case(&self) -> Result<CaseStudy> {
        let base = if self.case == "custom" {
            let missing: Vec<&str> = [
                ("stack", self.stack.is_none()),
                ("kinetics", self.kinetics.is_none()),
                ("amplitude_deg", self.amplitude_deg.is_none()),
                ("grid", self.grid.is_none()),
            ]
            .into_iter()
            .filter_map(|(name, absent)| absent.then_some(name))
            .collect();
            if !missing.is_empty() {
                bail!("custom case needs {}", missing.join(", "));
            }
            None
        } else {
            Some(cases::resolve_case(&self.case)?)
        };
        let pick = |over: Option<f64>, base: Option<f64>| over.or(base).expect("checked above");
        let study = CaseStudy::from_parts(
            self.case.clone(),
            self.stack
                .or(base.as_ref().map(|b| b.stack))
                .expect("checked above"),
            self.kinetics
                .or(base.as_ref().map(|b| b.kinetics))
                .expect("checked above"),
            pick(
                self.amplitude_deg,
                base.as_ref().map(|b| b.angular.amplitude_inf),
            ),
            self.grid
                .or(base.as_ref().map(|b| b.grid))
                .expect("checked above"),
            self.linearize
                .or(base.as_ref().map(|b| b.linearize))
                .unwrap_or(false),
            base.as_ref().map_or(100, |b| b.default_nu),
        )?;
        Ok(study)
    }

    pub fn scenario(&self, case_t_mid: f64) -> Result<SensingScenario> {
        let t_mid = self.scenario.t_mid.unwrap_or(case_t_mid);
        Ok(SensingScenario::new(
            self.scenario.mode,
            self.scenario.eta_a,
            t_mid,
        )?)
    }
}
