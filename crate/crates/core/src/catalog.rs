//! Compute platforms, drone bodies and power models, built-in or loaded from
//! a JSON catalog file.
//!
//! File schema:
//!
//! ```json
//! {
//!   "platforms": [{"name": "Jetson TX2", "sa_latency_s": 0.717, "sa_throughput_hz": 2.49,
//!                  "tdp_w": 15, "mass_g": 144, "total_s": 1.119}],
//!   "bodies": [{"name": "DJI-M100", "base_mass_kg": 2.4, "t_max_n": 35.28,
//!               "sensing_range_m": 6.98, "width_m": 0.65}],
//!   "power_models": [{"name": "dji", "coefficients": [-1.526, 3.934, 0.968,
//!                     18.125, 96.613, -1.085, 0.22, 1.332, 433.9]}]
//! }
//! ```
//!
//! Platform mass is given either as `mass_g` or `mass_kg` (exactly one).
//! `board_g` / `heat_sink_g` are optional metadata. Every list may be omitted.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline_models::ResponseProfile;
use crate::vehicle_dynamics::{DroneBody, PowerModelParams};

/// Relative tolerance between `latency + 1/throughput` and a declared total.
pub const TOTAL_RESPONSE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("platform `{name}`: {rule}")]
    InvalidPlatform { name: String, rule: String },
    #[error("body `{name}`: {reason}")]
    InvalidBody { name: String, reason: String },
    #[error("unknown {kind} `{name}`")]
    NotFound { kind: &'static str, name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputePlatform {
    pub name: String,
    pub sa_latency_s: f64,
    pub sa_throughput_hz: f64,
    pub tdp_w: f64,
    /// Board plus heat sink.
    pub mass_kg: f64,
}

impl ComputePlatform {
    pub fn new(
        name: &str,
        sa_latency_s: f64,
        sa_throughput_hz: f64,
        tdp_w: f64,
        mass_kg: f64,
    ) -> Self {
        Self {
            name: name.to_string(),
            sa_latency_s,
            sa_throughput_hz,
            tdp_w,
            mass_kg,
        }
    }

    /// `latency + 1 / throughput`.
    pub fn response_s(&self) -> f64 {
        self.sa_latency_s + 1.0 / self.sa_throughput_hz
    }

    pub fn response_profile(&self) -> Result<ResponseProfile, crate::pipeline_models::ModelError> {
        ResponseProfile::from_measured(self.sa_latency_s, self.sa_throughput_hz)
    }
}

/// Platform record as it appears in a catalog file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformRecord {
    pub name: String,
    pub sa_latency_s: f64,
    pub sa_throughput_hz: f64,
    pub tdp_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub board_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat_sink_g: Option<f64>,
}

impl PlatformRecord {
    fn to_platform(&self) -> Result<ComputePlatform, CatalogError> {
        let mass_kg = match (self.mass_g, self.mass_kg) {
            (Some(g), None) => g / 1000.0,
            (None, Some(kg)) => kg,
            (Some(_), Some(_)) => {
                return Err(self.invalid("give exactly one of mass_g / mass_kg, not both"))
            }
            (None, None) => return Err(self.invalid("missing mass (mass_g or mass_kg)")),
        };
        Ok(ComputePlatform::new(
            &self.name,
            self.sa_latency_s,
            self.sa_throughput_hz,
            self.tdp_w,
            mass_kg,
        ))
    }

    fn invalid(&self, rule: &str) -> CatalogError {
        CatalogError::InvalidPlatform {
            name: self.name.clone(),
            rule: rule.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPowerModel {
    pub name: String,
    pub coefficients: PowerModelParams,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogDocument {
    #[serde(default)]
    platforms: Vec<PlatformRecord>,
    #[serde(default)]
    bodies: Vec<DroneBody>,
    #[serde(default)]
    power_models: Vec<NamedPowerModel>,
}

/// A validated catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogFile {
    pub platforms: Vec<ComputePlatform>,
    /// Declared total response time per platform, parallel to `platforms`.
    pub declared_totals: Vec<Option<f64>>,
    pub bodies: Vec<DroneBody>,
    pub power_models: Vec<NamedPowerModel>,
}

impl CatalogFile {
    /// The four built-in platforms, the DJI body and the DJI power model.
    pub fn builtin() -> Self {
        Self {
            platforms: builtin_platforms(),
            declared_totals: BUILTIN_TOTALS.iter().map(|&t| Some(t)).collect(),
            bodies: vec![DroneBody::dji_m100()],
            power_models: vec![NamedPowerModel {
                name: "DJI-M100".to_string(),
                coefficients: PowerModelParams::DJI_M100,
            }],
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let doc: CatalogDocument = serde_json::from_str(text).map_err(|e| CatalogError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        unique("platform", doc.platforms.iter().map(|p| p.name.as_str()))?;
        unique("body", doc.bodies.iter().map(|b| b.name.as_str()))?;
        unique(
            "power model",
            doc.power_models.iter().map(|m| m.name.as_str()),
        )?;

        let mut platforms = Vec::with_capacity(doc.platforms.len());
        let mut declared_totals = Vec::with_capacity(doc.platforms.len());
        for rec in &doc.platforms {
            let p = rec.to_platform()?;
            validate_platform(&p, rec.total_s)?;
            platforms.push(p);
            declared_totals.push(rec.total_s);
        }
        for b in &doc.bodies {
            b.validate().map_err(|e| CatalogError::InvalidBody {
                name: b.name.clone(),
                reason: e.to_string(),
            })?;
        }
        Ok(Self {
            platforms,
            declared_totals,
            bodies: doc.bodies,
            power_models: doc.power_models,
        })
    }

    /// Canonical JSON form: masses in kilograms, declared totals kept.
    pub fn to_json(&self) -> String {
        let doc = CatalogDocument {
            platforms: self
                .platforms
                .iter()
                .zip(&self.declared_totals)
                .map(|(p, total)| PlatformRecord {
                    name: p.name.clone(),
                    sa_latency_s: p.sa_latency_s,
                    sa_throughput_hz: p.sa_throughput_hz,
                    tdp_w: p.tdp_w,
                    mass_g: None,
                    mass_kg: Some(p.mass_kg),
                    total_s: *total,
                    board_g: None,
                    heat_sink_g: None,
                })
                .collect(),
            bodies: self.bodies.clone(),
            power_models: self.power_models.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("catalog serializes")
    }

    pub fn platform(&self, name: &str) -> Result<&ComputePlatform, CatalogError> {
        find_by_name(&self.platforms, name, |p| &p.name).ok_or_else(|| CatalogError::NotFound {
            kind: "platform",
            name: name.to_string(),
        })
    }

    pub fn body(&self, name: &str) -> Result<&DroneBody, CatalogError> {
        find_by_name(&self.bodies, name, |b| &b.name).ok_or_else(|| CatalogError::NotFound {
            kind: "body",
            name: name.to_string(),
        })
    }

    pub fn power_model(&self, name: &str) -> Result<&NamedPowerModel, CatalogError> {
        find_by_name(&self.power_models, name, |m| &m.name).ok_or_else(|| CatalogError::NotFound {
            kind: "power model",
            name: name.to_string(),
        })
    }
}

/// Exact match first, then a unique case-insensitive substring match
/// (so `tx2` finds `Jetson TX2`).
fn find_by_name<'a, T>(items: &'a [T], name: &str, key: impl Fn(&T) -> &String) -> Option<&'a T> {
    if let Some(hit) = items.iter().find(|i| key(i) == name) {
        return Some(hit);
    }
    let needle = name.to_lowercase();
    let mut hits = items
        .iter()
        .filter(|i| key(i).to_lowercase().contains(&needle));
    match (hits.next(), hits.next()) {
        (Some(only), None) => Some(only),
        _ => None,
    }
}

fn unique<'a>(
    kind: &'static str,
    names: impl Iterator<Item = &'a str>,
) -> Result<(), CatalogError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(CatalogError::DuplicateName {
                kind,
                name: n.to_string(),
            });
        }
    }
    Ok(())
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<CatalogFile, CatalogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    CatalogFile::from_json(&text)
}

pub fn validate_platform(
    p: &ComputePlatform,
    declared_total_s: Option<f64>,
) -> Result<(), CatalogError> {
    let err = |rule: String| CatalogError::InvalidPlatform {
        name: p.name.clone(),
        rule,
    };
    for (field, v) in [
        ("sa_latency_s", p.sa_latency_s),
        ("sa_throughput_hz", p.sa_throughput_hz),
        ("tdp_w", p.tdp_w),
        ("mass_kg", p.mass_kg),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(err(format!("{field} must be positive and finite, got {v}")));
        }
    }
    if let Some(total) = declared_total_s {
        if !(total.is_finite() && total > 0.0) {
            return Err(err(format!(
                "total_s must be positive and finite, got {total}"
            )));
        }
        let derived = p.response_s();
        let rel = (derived - total).abs() / total;
        if rel > TOTAL_RESPONSE_TOLERANCE {
            return Err(err(format!(
                "latency + 1/throughput = {derived:.4} s differs from declared total {total} s by {:.2}% (> 1%)",
                rel * 100.0
            )));
        }
    }
    Ok(())
}

#[allow(clippy::approx_constant)]
const BUILTIN_TOTALS: [f64; 4] = [0.318, 0.65, 0.894, 1.119];

/// The four reference platforms: i9, i7, Xavier, TX2.
pub fn builtin_platforms() -> Vec<ComputePlatform> {
    vec![
        ComputePlatform::new("i9-9940X", 0.243, 13.3, 165.0, 1.109),
        ComputePlatform::new("i7-4790K", 0.426, 4.46, 88.0, 0.768),
        ComputePlatform::new("Jetson Xavier", 0.586, 3.25, 30.0, 0.380),
        ComputePlatform::new("Jetson TX2", 0.717, 2.49, 15.0, 0.144),
    ]
}

/// Declared `Total (s)` column for [`builtin_platforms`], same order.
pub fn builtin_declared_totals() -> [f64; 4] {
    BUILTIN_TOTALS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_match_declared_totals() {
        let ps = builtin_platforms();
        assert_eq!(ps.len(), 4);
        assert!((ps[0].response_s() - 0.3182).abs() < 1e-4);
        assert!((ps[3].response_s() - 1.1186).abs() < 1e-4);
        for (p, t) in ps.iter().zip(builtin_declared_totals()) {
            validate_platform(p, Some(t)).unwrap();
        }
    }

    #[test]
    fn validate_platform_rules() {
        let xavier = ComputePlatform::new("Xavier", 0.586, 3.25, 30.0, 0.38);
        assert!(validate_platform(&xavier, Some(0.894)).is_ok());
        let i7 = ComputePlatform::new("i7", 0.426, 4.46, 88.0, 0.768);
        assert!(validate_platform(&i7, Some(0.65)).is_ok());
        assert!(validate_platform(&i7, Some(0.80)).is_err());
        let neg = ComputePlatform::new("bad", 0.426, 4.46, -1.0, 0.768);
        let e = validate_platform(&neg, None).unwrap_err().to_string();
        assert!(e.contains("tdp_w"), "{e}");
    }

    #[test]
    fn parse_reports_line() {
        let text = "{\n  \"platforms\": [\n    {\"name\": \"x\",, }\n  ]\n}";
        match CatalogFile::from_json(text) {
            Err(CatalogError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn grams_and_kilograms() {
        let g = r#"{"platforms":[{"name":"a","sa_latency_s":0.717,"sa_throughput_hz":2.49,"tdp_w":15,"mass_g":144}]}"#;
        assert_eq!(
            CatalogFile::from_json(g).unwrap().platforms[0].mass_kg,
            0.144
        );
        let both = r#"{"platforms":[{"name":"a","sa_latency_s":0.717,"sa_throughput_hz":2.49,"tdp_w":15,"mass_g":144,"mass_kg":0.144}]}"#;
        assert!(CatalogFile::from_json(both).is_err());
        let none = r#"{"platforms":[{"name":"a","sa_latency_s":0.717,"sa_throughput_hz":2.49,"tdp_w":15}]}"#;
        assert!(CatalogFile::from_json(none).is_err());
    }

    #[test]
    fn lookup_by_name() {
        let c = CatalogFile::builtin();
        assert_eq!(c.platform("tx2").unwrap().name, "Jetson TX2");
        assert_eq!(c.platform("i9-9940X").unwrap().tdp_w, 165.0);
        // "Jetson" is ambiguous
        assert!(c.platform("jetson").is_err());
        assert!(c.platform("nosuch").is_err());
        assert!(c.body("dji").is_ok());
    }
}
