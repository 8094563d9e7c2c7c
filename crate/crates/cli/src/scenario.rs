//! Scenario files: a mission plus everything needed to fly it.

use anyhow::{anyhow, Context, Result};
use codesign_core::catalog::CatalogFile;
use codesign_core::mission_sim::{
    KnobPolicy, MissionSpec, OffloadConfig, ResolutionCurve, SimSetup, DEFAULT_DT_S,
};
use codesign_core::pipeline_models::PipelineTiming;
use codesign_core::vehicle_dynamics::{Battery, PowerModel};
use serde::Deserialize;

use crate::commands::usage;

pub const KNOB: &str = include_str!("../scenarios/knob.json");
pub const OFFLOAD: &str = include_str!("../scenarios/offload.json");

fn default_body() -> String {
    "DJI-M100".to_string()
}

fn default_power_model() -> PowerModelRef {
    PowerModelRef::Named("affine".to_string())
}

fn default_battery() -> Battery {
    Battery::full_3s(36_000.0, 100.0)
}

fn default_knob() -> String {
    "none".to_string()
}

/// `affine`, `parametric`, a catalog power-model name, or an inline model.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PowerModelRef {
    Named(String),
    Inline(PowerModel),
}

impl PowerModelRef {
    pub fn resolve(&self, catalog: &CatalogFile) -> Result<PowerModel> {
        match self {
            PowerModelRef::Inline(m) => Ok(*m),
            PowerModelRef::Named(n) => resolve_power_model(n, catalog),
        }
    }
}

pub fn resolve_power_model(name: &str, catalog: &CatalogFile) -> Result<PowerModel> {
    match name.to_ascii_lowercase().as_str() {
        "affine" => Ok(PowerModel::dji_affine()),
        "parametric" => Ok(PowerModel::dji_parametric()),
        _ => {
            let m = catalog.power_model(name)?;
            Ok(PowerModel::Parametric {
                coefficients: m.coefficients,
            })
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub label: String,
    #[serde(default)]
    pub knob: Option<String>,
    #[serde(default)]
    pub offload: Option<OffloadConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub platform: Option<String>,
    #[serde(default = "default_body")]
    pub body: String,
    #[serde(default = "default_power_model")]
    pub power_model: PowerModelRef,
    #[serde(default)]
    pub timing: Option<PipelineTiming>,
    #[serde(default = "default_battery")]
    pub battery: Battery,
    #[serde(default = "default_knob")]
    pub knob: String,
    #[serde(default)]
    pub curve: Option<ResolutionCurve>,
    #[serde(default)]
    pub offload: Option<OffloadConfig>,
    #[serde(default)]
    pub dt_s: Option<f64>,
    pub mission: MissionSpec,
    #[serde(default)]
    pub variants: Vec<Variant>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Accepts either a full scenario or a bare `{"segments": [...]}` mission.
    pub fn from_scenario_or_mission(text: &str) -> Result<Self> {
        match serde_json::from_str::<Scenario>(text) {
            Ok(s) => Ok(s),
            Err(scenario_err) => {
                let mission = MissionSpec::from_json(text)
                    .map_err(|_| anyhow!("not a scenario or mission file: {scenario_err}"))?;
                Ok(Scenario {
                    name: "mission".to_string(),
                    description: String::new(),
                    platform: None,
                    body: default_body(),
                    power_model: default_power_model(),
                    timing: None,
                    battery: default_battery(),
                    knob: default_knob(),
                    curve: None,
                    offload: None,
                    dt_s: None,
                    mission,
                    variants: Vec::new(),
                })
            }
        }
    }

    /// Builds a runnable setup; `None` arguments fall back to the file.
    pub fn setup(
        &self,
        catalog: &CatalogFile,
        platform: Option<&str>,
        knob: Option<&str>,
        offload: Option<OffloadConfig>,
        dt_s: Option<f64>,
    ) -> Result<SimSetup<PowerModel>> {
        let platform_name = platform
            .or(self.platform.as_deref())
            .ok_or_else(|| usage("no platform given (use --platform)"))?;
        let timing = self.timing.ok_or_else(|| {
            usage("no pipeline timing given (use --timing or a scenario file with \"timing\")")
        })?;
        let knob: KnobPolicy = knob
            .unwrap_or(&self.knob)
            .parse()
            .with_context(|| "invalid knob policy")?;
        Ok(SimSetup {
            mission: self.mission.clone(),
            body: catalog.body(&self.body)?.clone(),
            platform: catalog.platform(platform_name)?.clone(),
            timing,
            power_model: self.power_model.resolve(catalog)?,
            battery: self.battery,
            knob,
            curve: self.curve.clone().unwrap_or_default(),
            offload: offload.or(self.offload),
            dt_s: dt_s.or(self.dt_s).unwrap_or(DEFAULT_DT_S),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse() {
        let catalog = CatalogFile::builtin();
        for text in [KNOB, OFFLOAD] {
            let s = Scenario::from_json(text).unwrap();
            assert_eq!(s.variants.len(), 3);
            s.setup(&catalog, None, None, None, None).unwrap();
        }
    }

    #[test]
    fn bare_mission_needs_timing() {
        let s = Scenario::from_scenario_or_mission(
            r#"{"segments":[{"length_m":100,"sdr":2,"environment":"Outdoor"}]}"#,
        )
        .unwrap();
        assert!(s
            .setup(&CatalogFile::builtin(), Some("TX2"), None, None, None)
            .is_err());
    }
}
