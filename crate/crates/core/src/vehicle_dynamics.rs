//! Physical-quantity models: mass, thrust-limited acceleration, rotor power,
//! mission energy and a coulomb-counting battery.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ComputePlatform;
use crate::pipeline_models::{non_negative, positive, ModelError};

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Invalid(#[from] ModelError),
    #[error("cannot hover: weight {weight_n:.3} N > maximum thrust {t_max_n:.3} N")]
    CannotHover { weight_n: f64, t_max_n: f64 },
    #[error("need at least two anchors with distinct masses to fit a power line")]
    DegenerateAnchors,
    #[error("body `{0}`: maximum thrust does not lift the bare airframe")]
    BodyCannotHover(String),
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

/// Airframe constants, excluding the compute subsystem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroneBody {
    pub name: String,
    pub base_mass_kg: f64,
    pub t_max_n: f64,
    pub sensing_range_m: f64,
    pub width_m: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

impl DroneBody {
    /// DJI Matrice 100 class quad. Base mass is the 2544 g TX2 configuration
    /// minus the 144 g TX2 module; thrust is chosen so that configuration
    /// accelerates at 9.8 m/s^2; sensing range so it reaches 11.7 m/s.
    pub fn dji_m100() -> Self {
        Self {
            name: "DJI-M100".to_string(),
            base_mass_kg: 2.400,
            t_max_n: 35.28,
            sensing_range_m: 6.98,
            width_m: 0.65,
            gravity: STANDARD_GRAVITY,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        positive("base_mass_kg", self.base_mass_kg)?;
        positive("t_max_n", self.t_max_n)?;
        positive("sensing_range_m", self.sensing_range_m)?;
        positive("width_m", self.width_m)?;
        positive("gravity", self.gravity)?;
        if self.t_max_n <= self.base_mass_kg * self.gravity {
            return Err(DynamicsError::BodyCannotHover(self.name.clone()));
        }
        Ok(())
    }
}

pub fn total_mass(body: &DroneBody, platform: &ComputePlatform) -> f64 {
    body.base_mass_kg + platform.mass_kg
}

/// Horizontal acceleration left once thrust holds the weight:
/// `sqrt(T_max^2 - (m g)^2) / m`.
pub fn max_acceleration(body: &DroneBody, m_total: f64) -> Result<f64, DynamicsError> {
    positive("m_total", m_total)?;
    let weight = m_total * body.gravity;
    if weight > body.t_max_n {
        return Err(DynamicsError::CannotHover {
            weight_n: weight,
            t_max_n: body.t_max_n,
        });
    }
    Ok((body.t_max_n * body.t_max_n - weight * weight).sqrt() / m_total)
}

/// Kinematic state fed to a rotor power model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FlightState {
    pub v_xy: f64,
    pub a_xy: f64,
    pub v_z: f64,
    pub a_z: f64,
    pub mass_kg: f64,
    /// Dot product of horizontal velocity and wind velocity, m^2/s^2.
    pub wind_dot: f64,
}

impl FlightState {
    pub fn horizontal(v: f64, a: f64, mass_kg: f64) -> Self {
        Self {
            v_xy: v,
            a_xy: a,
            mass_kg,
            ..Self::default()
        }
    }
}

/// Anything that maps a flight state to rotor (mechanical) power in watts.
pub trait RotorPowerModel {
    fn rotor_power(&self, state: &FlightState) -> f64;
}

impl<T: RotorPowerModel + ?Sized> RotorPowerModel for &T {
    fn rotor_power(&self, state: &FlightState) -> f64 {
        (**self).rotor_power(state)
    }
}

/// Nine coefficients of the linear-in-features multirotor power model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 9]", into = "[f64; 9]")]
pub struct PowerModelParams {
    /// Pairs with `|v_xy|`, `|a_xy|`, `|v_xy| |a_xy|`.
    pub horizontal: [f64; 3],
    /// Pairs with `|v_z|`, `|a_z|`, `|v_z| |a_z|`.
    pub vertical: [f64; 3],
    /// Pairs with mass, `v_xy . w_xy`, constant 1.
    pub misc: [f64; 3],
}

impl PowerModelParams {
    /// Coefficients fitted for the DJI Matrice 100.
    pub const DJI_M100: Self = Self {
        horizontal: [-1.526, 3.934, 0.968],
        vertical: [18.125, 96.613, -1.085],
        misc: [0.22, 1.332, 433.9],
    };

    pub fn to_array(self) -> [f64; 9] {
        let mut out = [0.0; 9];
        out[..3].copy_from_slice(&self.horizontal);
        out[3..6].copy_from_slice(&self.vertical);
        out[6..].copy_from_slice(&self.misc);
        out
    }
}

impl From<[f64; 9]> for PowerModelParams {
    fn from(b: [f64; 9]) -> Self {
        Self {
            horizontal: [b[0], b[1], b[2]],
            vertical: [b[3], b[4], b[5]],
            misc: [b[6], b[7], b[8]],
        }
    }
}

impl From<PowerModelParams> for [f64; 9] {
    fn from(p: PowerModelParams) -> Self {
        p.to_array()
    }
}

fn dot3(a: &[f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn rotor_power_parametric(params: &PowerModelParams, s: &FlightState) -> f64 {
    let (vxy, axy) = (s.v_xy.abs(), s.a_xy.abs());
    let (vz, az) = (s.v_z.abs(), s.a_z.abs());
    dot3(&params.horizontal, [vxy, axy, vxy * axy])
        + dot3(&params.vertical, [vz, az, vz * az])
        + dot3(&params.misc, [s.mass_kg, s.wind_dot, 1.0])
}

/// Rotor power from the fitted nine-coefficient model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParametricPower(pub PowerModelParams);

impl Default for ParametricPower {
    fn default() -> Self {
        Self(PowerModelParams::DJI_M100)
    }
}

impl RotorPowerModel for ParametricPower {
    fn rotor_power(&self, state: &FlightState) -> f64 {
        rotor_power_parametric(&self.0, state)
    }
}

/// Rotor power as an affine function of total mass only,
/// `c0 + c1 * m`, calibrated against measured mission-level totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineHoverPower {
    pub c0_w: f64,
    pub c1_w_per_kg: f64,
}

impl AffineHoverPower {
    /// Line through the TX2 (2.544 kg, 521 W - 15 W TDP) and i9
    /// (3.509 kg, 770 W - 165 W TDP) configurations of the DJI M100.
    pub fn dji_m100_calibrated() -> Self {
        fit_affine_hover_power(&[(2.544, 506.0), (3.509, 605.0)])
            .expect("anchors have distinct masses")
    }
}

impl RotorPowerModel for AffineHoverPower {
    fn rotor_power(&self, state: &FlightState) -> f64 {
        self.c0_w + self.c1_w_per_kg * state.mass_kg
    }
}

/// Either rotor power model, for configuration files and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PowerModel {
    Parametric { coefficients: PowerModelParams },
    Affine { c0_w: f64, c1_w_per_kg: f64 },
}

impl PowerModel {
    pub fn dji_parametric() -> Self {
        PowerModel::Parametric {
            coefficients: PowerModelParams::DJI_M100,
        }
    }

    pub fn dji_affine() -> Self {
        let a = AffineHoverPower::dji_m100_calibrated();
        PowerModel::Affine {
            c0_w: a.c0_w,
            c1_w_per_kg: a.c1_w_per_kg,
        }
    }
}

impl RotorPowerModel for PowerModel {
    fn rotor_power(&self, state: &FlightState) -> f64 {
        match *self {
            PowerModel::Parametric { ref coefficients } => {
                rotor_power_parametric(coefficients, state)
            }
            PowerModel::Affine { c0_w, c1_w_per_kg } => c0_w + c1_w_per_kg * state.mass_kg,
        }
    }
}

/// Least-squares line `watts = c0 + c1 * mass` through `(mass, watts)` anchors.
pub fn fit_affine_hover_power(anchors: &[(f64, f64)]) -> Result<AffineHoverPower, DynamicsError> {
    if anchors.len() < 2 {
        return Err(DynamicsError::DegenerateAnchors);
    }
    let n = anchors.len() as f64;
    let mean_m = anchors.iter().map(|a| a.0).sum::<f64>() / n;
    let mean_p = anchors.iter().map(|a| a.1).sum::<f64>() / n;
    let sxx: f64 = anchors.iter().map(|a| (a.0 - mean_m).powi(2)).sum();
    let sxy: f64 = anchors
        .iter()
        .map(|a| (a.0 - mean_m) * (a.1 - mean_p))
        .sum();
    if sxx == 0.0 {
        return Err(DynamicsError::DegenerateAnchors);
    }
    let c1 = sxy / sxx;
    Ok(AffineHoverPower {
        c0_w: mean_p - c1 * mean_m,
        c1_w_per_kg: c1,
    })
}

pub fn total_power(rotor_w: f64, tdp_w: f64) -> f64 {
    rotor_w + tdp_w
}

pub fn mission_energy(power_w: f64, duration_s: f64) -> f64 {
    power_w * duration_s
}

/// Left-Riemann energy of a uniformly sampled power trace.
pub fn integrate_energy(power_w: &[f64], dt_s: f64) -> f64 {
    power_w.iter().map(|p| p * dt_s).sum()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BatteryError {
    #[error(transparent)]
    Invalid(#[from] ModelError),
    #[error("current {current_a:.2} A exceeds the battery limit of {limit_a:.2} A")]
    CurrentLimitExceeded { current_a: f64, limit_a: f64 },
    #[error("battery is already depleted")]
    Depleted,
    #[error("battery charge {charge_c} C outside [0, {capacity_c}] C")]
    ChargeOutOfRange { charge_c: f64, capacity_c: f64 },
    #[error("empty-voltage {v_empty} V must be below full-voltage {v_full} V")]
    VoltageOrder { v_empty: f64, v_full: f64 },
}

/// Shape of the open-circuit voltage against state of charge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoltageCurve {
    /// Piecewise-linear LiPo-like curve through (0, 0), (0.1, 0.4),
    /// (0.9, 0.9), (1, 1) in normalised voltage.
    #[default]
    Lipo,
    /// Constant `v_full` regardless of charge.
    Flat,
}

const LIPO_KNOTS: [(f64, f64); 4] = [(0.0, 0.0), (0.1, 0.4), (0.9, 0.9), (1.0, 1.0)];

/// Coulomb-counting battery. State transitions return a new value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub capacity_c: f64,
    pub v_full: f64,
    pub v_empty: f64,
    pub current_limit_a: f64,
    pub charge_c: f64,
    #[serde(default)]
    pub curve: VoltageCurve,
}

impl Battery {
    /// A full 3-cell pack.
    pub fn full_3s(capacity_c: f64, current_limit_a: f64) -> Self {
        Self {
            capacity_c,
            v_full: 12.6,
            v_empty: 9.0,
            current_limit_a,
            charge_c: capacity_c,
            curve: VoltageCurve::Lipo,
        }
    }

    pub fn with_curve(mut self, curve: VoltageCurve) -> Self {
        self.curve = curve;
        self
    }

    pub fn with_charge(mut self, charge_c: f64) -> Self {
        self.charge_c = charge_c;
        self
    }

    pub fn validate(&self) -> Result<(), BatteryError> {
        positive("capacity_c", self.capacity_c)?;
        positive("v_full", self.v_full)?;
        positive("v_empty", self.v_empty)?;
        positive("current_limit_a", self.current_limit_a)?;
        non_negative("charge_c", self.charge_c)?;
        if self.v_empty >= self.v_full {
            return Err(BatteryError::VoltageOrder {
                v_empty: self.v_empty,
                v_full: self.v_full,
            });
        }
        if self.charge_c > self.capacity_c {
            return Err(BatteryError::ChargeOutOfRange {
                charge_c: self.charge_c,
                capacity_c: self.capacity_c,
            });
        }
        Ok(())
    }

    pub fn charge_fraction(&self) -> f64 {
        self.charge_c / self.capacity_c
    }

    pub fn is_depleted(&self) -> bool {
        self.charge_c <= 0.0
    }

    /// Stored energy at full charge, integrating voltage over charge.
    pub fn energy_capacity_j(&self) -> f64 {
        match self.curve {
            VoltageCurve::Flat => self.capacity_c * self.v_full,
            VoltageCurve::Lipo => {
                let span = self.v_full - self.v_empty;
                let area: f64 = LIPO_KNOTS
                    .windows(2)
                    .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
                    .sum();
                self.capacity_c * (self.v_empty + span * area)
            }
        }
    }
}

pub fn battery_voltage(b: &Battery) -> f64 {
    match b.curve {
        VoltageCurve::Flat => b.v_full,
        VoltageCurve::Lipo => {
            let f = b.charge_fraction().clamp(0.0, 1.0);
            let span = b.v_full - b.v_empty;
            let seg = LIPO_KNOTS
                .windows(2)
                .find(|w| f <= w[1].0)
                .unwrap_or(&LIPO_KNOTS[2..4]);
            let (x0, y0) = seg[0];
            let (x1, y1) = seg[1];
            let y = y0 + (y1 - y0) * (f - x0) / (x1 - x0);
            b.v_empty + span * y
        }
    }
}

/// Result of drawing power from a battery for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryStep {
    pub battery: Battery,
    pub current_a: f64,
    /// Charge actually removed (may be less than `current_a * dt` when the
    /// pack runs out mid-step).
    pub drawn_c: f64,
    pub depleted: bool,
}

/// Draws `power_w` for `dt_s` seconds at the present terminal voltage.
pub fn battery_step(b: &Battery, power_w: f64, dt_s: f64) -> Result<BatteryStep, BatteryError> {
    positive("dt_s", dt_s)?;
    non_negative("power_w", power_w)?;
    if b.is_depleted() {
        return Err(BatteryError::Depleted);
    }
    let current_a = power_w / battery_voltage(b);
    if current_a > b.current_limit_a {
        return Err(BatteryError::CurrentLimitExceeded {
            current_a,
            limit_a: b.current_limit_a,
        });
    }
    let wanted = current_a * dt_s;
    let drawn_c = wanted.min(b.charge_c);
    let mut next = *b;
    next.charge_c = b.charge_c - drawn_c;
    Ok(BatteryStep {
        battery: next,
        current_a,
        drawn_c,
        depleted: next.is_depleted(),
    })
}
