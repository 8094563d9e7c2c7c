//! Design-space exploration over (compute mass, compute power, response time).
//!
//! Each lattice point is evaluated in closed form: thrust-limited
//! acceleration from total mass, the response-time velocity bound, average
//! velocity from the slow-down ratio, steady-cruise rotor power plus compute
//! power, and the resulting mission time and energy. Points that violate the
//! payload, hover, current or battery-energy constraints are kept but flagged.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline_models::{v_max_bound, ModelError, SlowDownRatio};
use crate::vehicle_dynamics::{max_acceleration, DroneBody, FlightState, RotorPowerModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DseError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("axis {axis}: need min < max and at least 2 steps (got {min}..{max} in {steps})")]
    BadAxis {
        axis: Axis,
        min: f64,
        max: f64,
        steps: usize,
    },
    #[error("constraint {0} must be positive")]
    BadConstraint(&'static str),
    #[error("samples do not form a full lattice over {0} x {1}")]
    RaggedLattice(Axis, Axis),
    #[error("samples are not a slice: {0} takes more than one value")]
    NotASlice(Axis),
    #[error("gradient axes must differ")]
    SameAxes,
    #[error("no adjacent feasible pair along {0}")]
    NoPairs(Axis),
    #[error("cannot parse grid spec `{0}` (expected mass=MIN:MAX:STEPS,power=...,response=...)")]
    GridSyntax(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Mass,
    Power,
    Response,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Mass, Axis::Power, Axis::Response];

    pub fn of(self, s: &FieldSample) -> f64 {
        match self {
            Axis::Mass => s.mass_kg,
            Axis::Power => s.power_w,
            Axis::Response => s.response_s,
        }
    }

    fn column(self) -> &'static str {
        match self {
            Axis::Mass => "mass_kg",
            Axis::Power => "power_w",
            Axis::Response => "response_s",
        }
    }

    fn third(a: Axis, b: Axis) -> Axis {
        Axis::ALL
            .into_iter()
            .find(|&x| x != a && x != b)
            .expect("two distinct axes leave a third")
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for Axis {
    type Err = DseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mass" | "mass_kg" => Ok(Axis::Mass),
            "power" | "power_w" => Ok(Axis::Power),
            "response" | "response_s" => Ok(Axis::Response),
            _ => Err(DseError::GridSyntax(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MissionTime,
    Energy,
}

impl Metric {
    pub fn of(self, s: &FieldSample) -> f64 {
        match self {
            Metric::MissionTime => s.mission_time_s,
            Metric::Energy => s.energy_j,
        }
    }
}

/// Evenly spaced values `min..=max` in `steps` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, steps: usize) -> Self {
        Self { min, max, steps }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignGrid {
    pub mass_kg: AxisRange,
    pub power_w: AxisRange,
    pub response_s: AxisRange,
}

impl DesignGrid {
    pub fn validate(&self) -> Result<(), DseError> {
        for (axis, r) in [
            (Axis::Mass, self.mass_kg),
            (Axis::Power, self.power_w),
            (Axis::Response, self.response_s),
        ] {
            if !(r.min.is_finite() && r.max.is_finite() && r.min < r.max && r.steps >= 2) {
                return Err(DseError::BadAxis {
                    axis,
                    min: r.min,
                    max: r.max,
                    steps: r.steps,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.mass_kg.steps * self.power_w.steps * self.response_s.steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FromStr for DesignGrid {
    type Err = DseError;

    /// `mass=0.05:1.5:30,power=5:200:40,response=0.05:3:60`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || DseError::GridSyntax(s.to_string());
        let mut axes = BTreeMap::new();
        for part in s.split(',') {
            let (name, range) = part.split_once('=').ok_or_else(syntax)?;
            let axis: Axis = name.parse().map_err(|_| syntax())?;
            let fields: Vec<&str> = range.split(':').collect();
            let [min, max, steps] = fields.as_slice() else {
                return Err(syntax());
            };
            let r = AxisRange::new(
                min.trim().parse().map_err(|_| syntax())?,
                max.trim().parse().map_err(|_| syntax())?,
                steps.trim().parse().map_err(|_| syntax())?,
            );
            axes.insert(axis, r);
        }
        let get = |a| axes.get(&a).copied().ok_or_else(syntax);
        let grid = DesignGrid {
            mass_kg: get(Axis::Mass)?,
            power_w: get(Axis::Power)?,
            response_s: get(Axis::Response)?,
        };
        grid.validate()?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub payload_max_kg: f64,
    pub battery_energy_j: f64,
    pub current_limit_a: f64,
    pub nominal_voltage_v: f64,
}

impl Constraints {
    pub fn validate(&self) -> Result<(), DseError> {
        for (name, v) in [
            ("payload_max_kg", self.payload_max_kg),
            ("battery_energy_j", self.battery_energy_j),
            ("current_limit_a", self.current_limit_a),
            ("nominal_voltage_v", self.nominal_voltage_v),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(DseError::BadConstraint(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Infeasibility {
    PayloadExceeded,
    BatteryInsufficient,
    CurrentLimit,
    CannotHover,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub mass_kg: f64,
    pub power_w: f64,
    pub response_s: f64,
    pub mission_time_s: f64,
    pub energy_j: f64,
    pub feasible: bool,
    pub infeasibility_reason: Option<Infeasibility>,
}

/// Quantities the feasibility rules look at for one design point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityInputs {
    pub compute_mass_kg: f64,
    pub can_hover: bool,
    pub total_power_w: f64,
    pub energy_j: f64,
}

/// Checks payload, hover, current and energy in that order; the first
/// violated rule is reported. Limits are inclusive.
pub fn is_feasible(inputs: &FeasibilityInputs, c: &Constraints) -> (bool, Option<Infeasibility>) {
    let reason = if inputs.compute_mass_kg > c.payload_max_kg {
        Some(Infeasibility::PayloadExceeded)
    } else if !inputs.can_hover {
        Some(Infeasibility::CannotHover)
    } else if inputs.total_power_w / c.nominal_voltage_v > c.current_limit_a {
        Some(Infeasibility::CurrentLimit)
    } else if inputs.energy_j > c.battery_energy_j {
        Some(Infeasibility::BatteryInsufficient)
    } else {
        None
    };
    (reason.is_none(), reason)
}

/// Fixed mission context for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepMission {
    pub path_length_m: f64,
    pub sdr: SlowDownRatio,
}

/// Evaluates one design point.
pub fn evaluate_point<P: RotorPowerModel + ?Sized>(
    body: &DroneBody,
    mission: &SweepMission,
    constraints: &Constraints,
    power_model: &P,
    mass_kg: f64,
    power_w: f64,
    response_s: f64,
) -> Result<FieldSample, DseError> {
    let m_total = body.base_mass_kg + mass_kg;
    let (mission_time_s, energy_j, total_power_w, can_hover) = match max_acceleration(body, m_total)
    {
        Ok(a_max) => {
            let v_max = v_max_bound(a_max, body.sensing_range_m, response_s)?;
            let v_avg = v_max / mission.sdr.value();
            let t = mission.path_length_m / v_avg;
            let p =
                power_model.rotor_power(&FlightState::horizontal(v_avg, 0.0, m_total)) + power_w;
            (t, p * t, p, true)
        }
        Err(_) => (f64::NAN, f64::NAN, f64::NAN, false),
    };
    let (feasible, reason) = is_feasible(
        &FeasibilityInputs {
            compute_mass_kg: mass_kg,
            can_hover,
            total_power_w,
            energy_j,
        },
        constraints,
    );
    Ok(FieldSample {
        mass_kg,
        power_w,
        response_s,
        mission_time_s,
        energy_j,
        feasible,
        infeasibility_reason: reason,
    })
}

/// Evaluates every lattice point, mass outermost, response innermost.
pub fn sweep<P: RotorPowerModel + ?Sized>(
    grid: &DesignGrid,
    body: &DroneBody,
    mission: &SweepMission,
    constraints: &Constraints,
    power_model: &P,
) -> Result<Vec<FieldSample>, DseError> {
    grid.validate()?;
    constraints.validate()?;
    let responses = grid.response_s.values();
    let powers = grid.power_w.values();
    let mut out = Vec::with_capacity(grid.len());
    for &m in &grid.mass_kg.values() {
        for &p in &powers {
            for &r in &responses {
                out.push(evaluate_point(
                    body,
                    mission,
                    constraints,
                    power_model,
                    m,
                    p,
                    r,
                )?);
            }
        }
    }
    Ok(out)
}

/// Samples whose `axis` value equals the lattice value nearest to `value`.
pub fn slice(samples: &[FieldSample], axis: Axis, value: f64) -> Vec<FieldSample> {
    let Some(nearest) = samples
        .iter()
        .map(|s| axis.of(s))
        .min_by(|a, b| (a - value).abs().total_cmp(&(b - value).abs()))
    else {
        return Vec::new();
    };
    samples
        .iter()
        .filter(|s| axis.of(s) == nearest)
        .copied()
        .collect()
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientCell {
    pub x1: f64,
    pub x2: f64,
    pub grad1: f64,
    pub grad2: f64,
    pub defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientField {
    pub axis1: Axis,
    pub axis2: Axis,
    pub values1: Vec<f64>,
    pub values2: Vec<f64>,
    /// Row-major, `axis1` outer.
    pub cells: Vec<GradientCell>,
}

impl GradientField {
    pub fn at(&self, i: usize, j: usize) -> &GradientCell {
        &self.cells[i * self.values2.len() + j]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis1,axis2,grad1,grad2,defined\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c.x1, c.x2, c.grad1, c.grad2, c.defined
            ));
        }
        out
    }
}

/// Finite-difference gradient of `metric` over a 2-D slice: central
/// differences inside, one-sided at the borders. A cell is undefined when
/// it or any of its stencil points is infeasible.
pub fn gradient_field(
    samples: &[FieldSample],
    metric: Metric,
    axes: (Axis, Axis),
) -> Result<GradientField, DseError> {
    let (axis1, axis2) = axes;
    if axis1 == axis2 {
        return Err(DseError::SameAxes);
    }
    let third = Axis::third(axis1, axis2);
    if distinct_sorted(samples.iter().map(|s| third.of(s))).len() > 1 {
        return Err(DseError::NotASlice(third));
    }
    let values1 = distinct_sorted(samples.iter().map(|s| axis1.of(s)));
    let values2 = distinct_sorted(samples.iter().map(|s| axis2.of(s)));
    let (n1, n2) = (values1.len(), values2.len());
    let ragged = DseError::RaggedLattice(axis1, axis2);
    if n1 < 2 || n2 < 2 || n1 * n2 != samples.len() {
        return Err(ragged);
    }
    let mut lattice: Vec<Option<&FieldSample>> = vec![None; n1 * n2];
    for s in samples {
        let i = values1
            .binary_search_by(|v| v.total_cmp(&axis1.of(s)))
            .map_err(|_| ragged.clone())?;
        let j = values2
            .binary_search_by(|v| v.total_cmp(&axis2.of(s)))
            .map_err(|_| ragged.clone())?;
        if lattice[i * n2 + j].replace(s).is_some() {
            return Err(ragged);
        }
    }
    let point = |i: usize, j: usize| lattice[i * n2 + j].expect("lattice is full");
    let usable = |s: &FieldSample| s.feasible && metric.of(s).is_finite();

    let stencil = |k: usize, n: usize| -> (usize, usize) {
        if k == 0 {
            (0, 1)
        } else if k + 1 == n {
            (n - 2, n - 1)
        } else {
            (k - 1, k + 1)
        }
    };

    let mut cells = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let (i0, i1) = stencil(i, n1);
            let (j0, j1) = stencil(j, n2);
            let pts = [
                point(i, j),
                point(i0, j),
                point(i1, j),
                point(i, j0),
                point(i, j1),
            ];
            let defined = pts.iter().all(|s| usable(s));
            let (grad1, grad2) = if defined {
                (
                    (metric.of(point(i1, j)) - metric.of(point(i0, j)))
                        / (values1[i1] - values1[i0]),
                    (metric.of(point(i, j1)) - metric.of(point(i, j0)))
                        / (values2[j1] - values2[j0]),
                )
            } else {
                (f64::NAN, f64::NAN)
            };
            cells.push(GradientCell {
                x1: values1[i],
                x2: values2[j],
                grad1,
                grad2,
                defined,
            });
        }
    }
    Ok(GradientField {
        axis1,
        axis2,
        values1,
        values2,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sensitivity {
    pub mean: f64,
    pub std: f64,
    pub pairs: usize,
}

/// Mean and population standard deviation of the elasticity
/// `|dM / M| / |dq / q|` over adjacent feasible pairs along `axis`, with
/// relative changes taken against the pair midpoint.
pub fn sensitivity(
    samples: &[FieldSample],
    metric: Metric,
    axis: Axis,
) -> Result<Sensitivity, DseError> {
    let others: Vec<Axis> = Axis::ALL.into_iter().filter(|&a| a != axis).collect();
    let mut lines: BTreeMap<(u64, u64), Vec<&FieldSample>> = BTreeMap::new();
    for s in samples {
        let key = (others[0].of(s).to_bits(), others[1].of(s).to_bits());
        lines.entry(key).or_default().push(s);
    }
    let mut values = Vec::new();
    for line in lines.values_mut() {
        line.sort_by(|a, b| axis.of(a).total_cmp(&axis.of(b)));
        for w in line.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !(a.feasible && b.feasible) {
                continue;
            }
            let (qa, qb) = (axis.of(a), axis.of(b));
            let (ma, mb) = (metric.of(a), metric.of(b));
            if qa == qb || !(ma.is_finite() && mb.is_finite()) {
                continue;
            }
            let dq = (qb - qa) / ((qa + qb) / 2.0);
            let dm = mb - ma;
            let s = if dm == 0.0 {
                0.0
            } else {
                let mid = (ma + mb) / 2.0;
                if mid == 0.0 {
                    continue;
                }
                (dm / mid).abs() / dq.abs()
            };
            values.push(s);
        }
    }
    if values.is_empty() {
        return Err(DseError::NoPairs(axis));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(Sensitivity {
        mean,
        std: var.sqrt(),
        pairs: values.len(),
    })
}

/// Number of feasible samples for each distinct value of `axis`, ascending.
pub fn feasible_counts(samples: &[FieldSample], axis: Axis) -> Vec<(f64, usize)> {
    let mut counts: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for s in samples {
        let v = axis.of(s);
        // order-preserving key for non-negative floats
        let e = counts.entry(v.to_bits()).or_insert((v, 0));
        if s.feasible {
            e.1 += 1;
        }
    }
    let mut out: Vec<(f64, usize)> = counts.into_values().collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

pub const FIELD_CSV_HEADER: &str =
    "mass_kg,power_w,response_s,mission_time_s,energy_j,feasible,reason";

pub fn samples_to_csv(samples: &[FieldSample]) -> String {
    let mut out = String::from(FIELD_CSV_HEADER);
    out.push('\n');
    for s in samples {
        let reason = s
            .infeasibility_reason
            .map(|r| r.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.mass_kg, s.power_w, s.response_s, s.mission_time_s, s.energy_j, s.feasible, reason
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle_dynamics::AffineHoverPower;

    fn roomy() -> Constraints {
        Constraints {
            payload_max_kg: 1.2,
            battery_energy_j: 1e9,
            current_limit_a: 1e4,
            nominal_voltage_v: 11.1,
        }
    }

    fn synthetic(f: impl Fn(f64, f64) -> f64) -> Vec<FieldSample> {
        let mut v = Vec::new();
        for i in 0..5 {
            for j in 0..4 {
                let m = 0.1 + 0.2 * i as f64;
                let r = 0.5 + 0.25 * j as f64;
                let val = f(m, r);
                v.push(FieldSample {
                    mass_kg: m,
                    power_w: 10.0,
                    response_s: r,
                    mission_time_s: val,
                    energy_j: val,
                    feasible: true,
                    infeasibility_reason: None,
                });
            }
        }
        v
    }

    #[test]
    fn feasibility_rules() {
        let c = roomy();
        let base = FeasibilityInputs {
            compute_mass_kg: 0.5,
            can_hover: true,
            total_power_w: 500.0,
            energy_j: 1e9,
        };
        assert_eq!(is_feasible(&base, &c), (true, None));
        let over_current = FeasibilityInputs {
            total_power_w: 1e4 * 11.1 + 1.0,
            ..base
        };
        assert_eq!(
            is_feasible(&over_current, &c),
            (false, Some(Infeasibility::CurrentLimit))
        );
        let heavy = FeasibilityInputs {
            compute_mass_kg: 2.0,
            ..base
        };
        assert_eq!(
            is_feasible(&heavy, &c).1,
            Some(Infeasibility::PayloadExceeded)
        );
        let thirsty = FeasibilityInputs {
            energy_j: 1e9 + 1.0,
            ..base
        };
        assert_eq!(
            is_feasible(&thirsty, &c).1,
            Some(Infeasibility::BatteryInsufficient)
        );
    }

    #[test]
    fn sweep_flags_infeasible_points() {
        let body = DroneBody::dji_m100();
        let mission = SweepMission {
            path_length_m: 1000.0,
            sdr: SlowDownRatio::new(4.0).unwrap(),
        };
        let model = AffineHoverPower::dji_m100_calibrated();
        let s = evaluate_point(&body, &mission, &roomy(), &model, 1.5, 10.0, 0.5).unwrap();
        assert_eq!(s.infeasibility_reason, Some(Infeasibility::PayloadExceeded));
        let mut c = roomy();
        c.payload_max_kg = 10.0;
        let s = evaluate_point(&body, &mission, &c, &model, 1.5, 10.0, 0.5).unwrap();
        assert_eq!(s.infeasibility_reason, Some(Infeasibility::CannotHover));
        assert!(s.mission_time_s.is_nan());
    }

    #[test]
    fn sweep_ordering_is_row_major() {
        let grid: DesignGrid = "mass=0.1:0.3:3,power=10:30:2,response=0.2:0.6:2"
            .parse()
            .unwrap();
        let body = DroneBody::dji_m100();
        let mission = SweepMission {
            path_length_m: 1000.0,
            sdr: SlowDownRatio::new(2.0).unwrap(),
        };
        let s = sweep(
            &grid,
            &body,
            &mission,
            &roomy(),
            &AffineHoverPower::dji_m100_calibrated(),
        )
        .unwrap();
        assert_eq!(s.len(), 12);
        assert_eq!(
            (s[0].mass_kg, s[0].power_w, s[0].response_s),
            (0.1, 10.0, 0.2)
        );
        assert_eq!(
            (s[1].mass_kg, s[1].power_w, s[1].response_s),
            (0.1, 10.0, 0.6)
        );
        assert_eq!(
            (s[2].mass_kg, s[2].power_w, s[2].response_s),
            (0.1, 30.0, 0.2)
        );
        assert_eq!(s[11].mass_kg, 0.3);
    }

    #[test]
    fn grid_validation() {
        assert!("mass=0.1:0.1:3,power=10:30:2,response=0.2:0.6:2"
            .parse::<DesignGrid>()
            .is_err());
        assert!("mass=0.1:0.3:1,power=10:30:2,response=0.2:0.6:2"
            .parse::<DesignGrid>()
            .is_err());
        assert!("mass=0.1:0.3:3,power=10:30:2"
            .parse::<DesignGrid>()
            .is_err());
        assert!("garbage".parse::<DesignGrid>().is_err());
    }

    #[test]
    fn gradient_of_constant_and_linear_fields() {
        let g = gradient_field(
            &synthetic(|_, _| 7.0),
            Metric::MissionTime,
            (Axis::Mass, Axis::Response),
        )
        .unwrap();
        assert!(g
            .cells
            .iter()
            .all(|c| c.defined && c.grad1 == 0.0 && c.grad2 == 0.0));
        let g = gradient_field(
            &synthetic(|m, _| 3.0 * m),
            Metric::MissionTime,
            (Axis::Mass, Axis::Response),
        )
        .unwrap();
        for c in &g.cells {
            assert!((c.grad1 - 3.0).abs() < 1e-9 && c.grad2.abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_neighbour_voids_cell() {
        let mut s = synthetic(|m, r| m + r);
        s[6].feasible = false; // i = 1, j = 2
        let g = gradient_field(&s, Metric::Energy, (Axis::Mass, Axis::Response)).unwrap();
        assert!(!g.at(1, 2).defined);
        assert!(!g.at(0, 2).defined); // one-sided stencil uses i = 1
        assert!(!g.at(2, 2).defined);
        assert!(!g.at(1, 1).defined && !g.at(1, 3).defined);
        assert!(g.at(3, 0).defined);
    }

    #[test]
    fn ragged_and_non_slice_inputs() {
        let mut s = synthetic(|m, _| m);
        s.pop();
        assert!(matches!(
            gradient_field(&s, Metric::Energy, (Axis::Mass, Axis::Response)),
            Err(DseError::RaggedLattice(..))
        ));
        let mut s = synthetic(|m, _| m);
        s[0].power_w = 11.0;
        assert!(matches!(
            gradient_field(&s, Metric::Energy, (Axis::Mass, Axis::Response)),
            Err(DseError::NotASlice(Axis::Power))
        ));
        assert_eq!(
            gradient_field(
                &synthetic(|m, _| m),
                Metric::Energy,
                (Axis::Mass, Axis::Mass)
            ),
            Err(DseError::SameAxes)
        );
    }

    #[test]
    fn sensitivity_of_doubling_metric() {
        let mk = |q: f64, m: f64| FieldSample {
            mass_kg: q,
            power_w: 1.0,
            response_s: 1.0,
            mission_time_s: m,
            energy_j: m,
            feasible: true,
            infeasibility_reason: None,
        };
        let s = sensitivity(
            &[mk(1.0, 5.0), mk(2.0, 10.0)],
            Metric::MissionTime,
            Axis::Mass,
        )
        .unwrap();
        assert!((s.mean - 1.0).abs() <= 0.15);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.pairs, 1);
        assert!(matches!(
            sensitivity(&[mk(1.0, 5.0)], Metric::MissionTime, Axis::Mass),
            Err(DseError::NoPairs(Axis::Mass))
        ));
    }

    #[test]
    fn csv_headers() {
        let csv = samples_to_csv(&synthetic(|m, _| m)[..1]);
        assert!(
            csv.starts_with("mass_kg,power_w,response_s,mission_time_s,energy_j,feasible,reason\n")
        );
        let g = gradient_field(
            &synthetic(|m, _| m),
            Metric::Energy,
            (Axis::Mass, Axis::Response),
        )
        .unwrap();
        assert!(g.to_csv().starts_with("axis1,axis2,grad1,grad2,defined\n"));
    }
}
