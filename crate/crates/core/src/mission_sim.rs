//! Deterministic discrete-time mission simulator.
//!
//! A mission is an ordered list of segments. For each segment the simulator
//! picks a map resolution, checks the narrowest opening is still passable at
//! that resolution, derives the pipeline response time and with it the
//! velocity cap, hovers while planning, then flies a trapezoidal velocity
//! profile (ramp at `a_max`, cruise at `v_cap / sdr`, ramp down to rest).
//! Each tick of `dt` draws rotor power plus compute TDP from a coulomb
//! counting battery.
//!
//! The flight profile itself is analytic; ticks sample it. Energy and charge
//! are integrated with a left Riemann sum.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ComputePlatform;
use crate::pipeline_models::{
    response_time_or_ideal, v_max_bound, ModelError, PipelineTiming, SlowDownRatio,
};
use crate::vehicle_dynamics::{
    battery_step, battery_voltage, max_acceleration, total_mass, Battery, BatteryError, DroneBody,
    DynamicsError, FlightState, RotorPowerModel,
};

pub const DEFAULT_DT_S: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Battery(#[from] BatteryError),
    #[error("mission has no segments")]
    EmptyMission,
    #[error("segment {index}: {reason}")]
    InvalidSegment { index: usize, reason: String },
    #[error("resolution curve needs at least two anchors sorted by resolution with strictly decreasing latency")]
    InvalidCurve,
    #[error("resolution {resolution_m} m outside the curve range [{min_m}, {max_m}] m")]
    ResolutionOutOfRange {
        resolution_m: f64,
        min_m: f64,
        max_m: f64,
    },
    #[error("knob policy has no resolution for {0:?} segments")]
    MissingEnvironment(Environment),
    #[error("offload speedup must be positive and rtt non-negative")]
    InvalidOffload,
    #[error("dt {dt_s} s must be positive and at most a tenth of the shortest stage latency ({limit_s} s)")]
    InvalidDt { dt_s: f64, limit_s: f64 },
    #[error("trace has no samples")]
    EmptyTrace,
    #[error(
        "cannot parse knob policy `{0}` (expected none | static:R | dynamic:outdoor=R,indoor=R)"
    )]
    KnobSyntax(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Environment {
    Outdoor,
    Indoor,
}

impl FromStr for Environment {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "outdoor" => Ok(Environment::Outdoor),
            "indoor" => Ok(Environment::Indoor),
            _ => Err(SimError::KnobSyntax(s.to_string())),
        }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Environment::Outdoor => "outdoor",
            Environment::Indoor => "indoor",
        })
    }
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length_m: f64,
    pub sdr: SlowDownRatio,
    pub environment: Environment,
    /// Narrowest opening the drone must pass; `None` is open space.
    #[serde(default)]
    pub min_gap_m: Option<f64>,
    #[serde(default = "one")]
    pub replans: u32,
}

impl Segment {
    pub fn open(length_m: f64, sdr: f64, environment: Environment) -> Self {
        Self {
            length_m,
            sdr: SlowDownRatio::new(sdr).expect("sdr >= 1"),
            environment,
            min_gap_m: None,
            replans: 1,
        }
    }

    pub fn with_gap(mut self, min_gap_m: f64) -> Self {
        self.min_gap_m = Some(min_gap_m);
        self
    }

    pub fn with_replans(mut self, replans: u32) -> Self {
        self.replans = replans;
        self
    }

    fn gap(&self) -> f64 {
        self.min_gap_m.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSpec {
    pub segments: Vec<Segment>,
}

impl MissionSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.segments.is_empty() {
            return Err(SimError::EmptyMission);
        }
        for (index, s) in self.segments.iter().enumerate() {
            let bad = |reason: &str| SimError::InvalidSegment {
                index,
                reason: reason.to_string(),
            };
            if !(s.length_m.is_finite() && s.length_m > 0.0) {
                return Err(bad("length_m must be positive"));
            }
            if s.gap().is_nan() || s.gap() <= 0.0 {
                return Err(bad("min_gap_m must be positive"));
            }
        }
        Ok(())
    }

    pub fn total_length_m(&self) -> f64 {
        self.segments.iter().map(|s| s.length_m).sum()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Map-update latency as a function of voxel size, interpolated in log-log
/// space between anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionCurve {
    /// `(resolution_m, latency_s)` sorted by resolution.
    pub anchors: Vec<(f64, f64)>,
}

impl Default for ResolutionCurve {
    fn default() -> Self {
        Self {
            anchors: vec![(0.15, 0.45), (0.975, 0.10)],
        }
    }
}

impl ResolutionCurve {
    pub fn new(anchors: Vec<(f64, f64)>) -> Result<Self, SimError> {
        let c = Self { anchors };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.anchors.len() < 2
            || self
                .anchors
                .iter()
                .any(|&(r, l)| !(r.is_finite() && r > 0.0 && l.is_finite() && l > 0.0))
            || self
                .anchors
                .windows(2)
                .any(|w| !(w[0].0 < w[1].0 && w[0].1 > w[1].1))
        {
            return Err(SimError::InvalidCurve);
        }
        Ok(())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.anchors[0].0, self.anchors[self.anchors.len() - 1].0)
    }
}

pub fn resolution_latency(curve: &ResolutionCurve, r: f64) -> Result<f64, SimError> {
    curve.validate()?;
    let (min_m, max_m) = curve.range();
    if !(r >= min_m && r <= max_m) {
        return Err(SimError::ResolutionOutOfRange {
            resolution_m: r,
            min_m,
            max_m,
        });
    }
    let w = curve
        .anchors
        .windows(2)
        .find(|w| r <= w[1].0)
        .expect("r is within range");
    let ((r0, l0), (r1, l1)) = (w[0], w[1]);
    if r == r0 {
        return Ok(l0);
    }
    if r == r1 {
        return Ok(l1);
    }
    let s = (r / r0).ln() / (r1 / r0).ln();
    Ok((l0.ln() + s * (l1 / l0).ln()).exp())
}

/// True when an opening of `min_gap_m`, shrunk by one voxel of obstacle
/// inflation, still fits a drone of width `width_m`.
pub fn passable(min_gap_m: f64, resolution_m: f64, width_m: f64) -> bool {
    min_gap_m - resolution_m >= width_m
}

/// How the occupancy-map resolution is chosen per segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnobPolicy {
    /// No map knob: perception latency as given, no obstacle inflation.
    Passthrough,
    StaticResolution(f64),
    Dynamic(BTreeMap<Environment, f64>),
}

impl KnobPolicy {
    pub fn dynamic(outdoor_m: f64, indoor_m: f64) -> Self {
        KnobPolicy::Dynamic(
            [
                (Environment::Outdoor, outdoor_m),
                (Environment::Indoor, indoor_m),
            ]
            .into_iter()
            .collect(),
        )
    }

    pub fn resolution_for(&self, env: Environment) -> Result<Option<f64>, SimError> {
        match self {
            KnobPolicy::Passthrough => Ok(None),
            KnobPolicy::StaticResolution(r) => Ok(Some(*r)),
            KnobPolicy::Dynamic(map) => map
                .get(&env)
                .copied()
                .map(Some)
                .ok_or(SimError::MissingEnvironment(env)),
        }
    }

    pub fn validate(&self, curve: &ResolutionCurve) -> Result<(), SimError> {
        let (min_m, max_m) = curve.range();
        let check = |r: f64| {
            if r >= min_m && r <= max_m {
                Ok(())
            } else {
                Err(SimError::ResolutionOutOfRange {
                    resolution_m: r,
                    min_m,
                    max_m,
                })
            }
        };
        match self {
            KnobPolicy::Passthrough => Ok(()),
            KnobPolicy::StaticResolution(r) => check(*r),
            KnobPolicy::Dynamic(map) => map.values().try_for_each(|&r| check(r)),
        }
    }
}

impl fmt::Display for KnobPolicy {
    /// Same syntax `FromStr` accepts.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnobPolicy::Passthrough => f.write_str("none"),
            KnobPolicy::StaticResolution(r) => write!(f, "static:{r}"),
            KnobPolicy::Dynamic(map) => {
                f.write_str("dynamic:")?;
                for (i, (env, r)) in map.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{env}={r}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for KnobPolicy {
    type Err = SimError;

    /// `none`, `static:0.15`, or `dynamic:outdoor=0.8,indoor=0.15`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || SimError::KnobSyntax(s.to_string());
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim().to_ascii_lowercase().as_str() {
            "none" | "passthrough" if rest.is_empty() => Ok(KnobPolicy::Passthrough),
            "static" => rest
                .trim()
                .parse()
                .map(KnobPolicy::StaticResolution)
                .map_err(|_| syntax()),
            "dynamic" => {
                let mut map = BTreeMap::new();
                for part in rest.split(',') {
                    let (env, r) = part.split_once('=').ok_or_else(syntax)?;
                    let env: Environment = env.trim().parse().map_err(|_| syntax())?;
                    let r: f64 = r.trim().parse().map_err(|_| syntax())?;
                    map.insert(env, r);
                }
                Ok(KnobPolicy::Dynamic(map))
            }
            _ => Err(syntax()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OffloadStage {
    #[default]
    Planning,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffloadConfig {
    #[serde(default)]
    pub stage: OffloadStage,
    pub speedup: f64,
    #[serde(default)]
    pub rtt_s: f64,
    #[serde(default)]
    pub remote_tdp_excluded: bool,
}

impl OffloadConfig {
    pub fn planning(speedup: f64, rtt_s: f64) -> Self {
        Self {
            stage: OffloadStage::Planning,
            speedup,
            rtt_s,
            remote_tdp_excluded: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.speedup.is_finite()
            && self.speedup > 0.0
            && self.rtt_s.is_finite()
            && self.rtt_s >= 0.0)
        {
            return Err(SimError::InvalidOffload);
        }
        Ok(())
    }
}

pub fn apply_offload(t: &PipelineTiming, o: &OffloadConfig) -> PipelineTiming {
    match o.stage {
        OffloadStage::Planning => PipelineTiming {
            planning_s: t.planning_s / o.speedup + o.rtt_s,
            ..*t
        },
    }
}

/// Everything a simulation run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSetup<P> {
    pub mission: MissionSpec,
    pub body: DroneBody,
    pub platform: ComputePlatform,
    pub timing: PipelineTiming,
    pub power_model: P,
    pub battery: Battery,
    pub knob: KnobPolicy,
    #[serde(default)]
    pub curve: ResolutionCurve,
    #[serde(default)]
    pub offload: Option<OffloadConfig>,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
}

fn default_dt() -> f64 {
    DEFAULT_DT_S
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t_s: f64,
    pub x_m: f64,
    pub v_mps: f64,
    pub power_w: f64,
    /// Charge at the start of the tick.
    pub charge_c: f64,
    /// Signed acceleration over the tick.
    pub a_mps2: f64,
    pub hovering: bool,
    pub segment: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    NoPath,
    BatteryEmpty,
    CurrentLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MissionStatus {
    Completed,
    Failed(FailureReason),
}

impl fmt::Display for MissionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MissionStatus::Completed => f.write_str("Completed"),
            MissionStatus::Failed(r) => write!(f, "Failed({r:?})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SimEvent {
    SegmentEnter {
        t_s: f64,
        segment: usize,
        resolution_m: Option<f64>,
        v_cap_mps: f64,
        v_target_mps: f64,
    },
    PlanStart {
        t_s: f64,
        segment: usize,
    },
    PlanStop {
        t_s: f64,
        segment: usize,
    },
    KnobSwitch {
        t_s: f64,
        from_m: Option<f64>,
        to_m: Option<f64>,
    },
    Failure {
        t_s: f64,
        segment: usize,
        reason: FailureReason,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub mission_time_s: f64,
    pub energy_j: f64,
    pub distance_m: f64,
    pub avg_v_mps: f64,
    pub hover_s: f64,
    pub battery_frac_remaining: f64,
    pub status: MissionStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub dt_s: f64,
    pub samples: Vec<Sample>,
    pub events: Vec<SimEvent>,
    pub initial_charge_c: f64,
    pub final_charge_c: f64,
    /// Distance covered when the trace ends.
    pub distance_m: f64,
    pub status: MissionStatus,
    pub summary: SimSummary,
}

impl SimTrace {
    pub const CSV_HEADER: &'static str = "t_s,x_m,v_mps,power_w,charge_c";

    /// CSV with full-precision decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 48 + 64);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.t_s, s.x_m, s.v_mps, s.power_w, s.charge_c
            ));
        }
        out
    }
}

fn summary_of(trace: &SimTrace) -> SimSummary {
    let dt = trace.dt_s;
    let mission_time_s = trace.samples.len() as f64 * dt;
    let energy_j = trace.samples.iter().map(|s| s.power_w * dt).sum();
    let hover_s = trace.samples.iter().filter(|s| s.hovering).count() as f64 * dt;
    let distance_m = trace.distance_m;
    SimSummary {
        mission_time_s,
        energy_j,
        distance_m,
        avg_v_mps: if mission_time_s > 0.0 {
            distance_m / mission_time_s
        } else {
            0.0
        },
        hover_s,
        battery_frac_remaining: trace.final_charge_c / trace.initial_charge_c,
        status: trace.status,
    }
}

/// Summary metrics of a trace: energy is the left-Riemann sum of power.
pub fn summarize(trace: &SimTrace) -> Result<SimSummary, SimError> {
    if trace.samples.is_empty() {
        return Err(SimError::EmptyTrace);
    }
    Ok(summary_of(trace))
}

/// Per-segment quantities fixed before flight.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPlan {
    pub resolution_m: Option<f64>,
    pub passable: bool,
    pub timing: PipelineTiming,
    pub response_s: f64,
    pub v_cap_mps: f64,
    pub v_target_mps: f64,
    pub hover_s: f64,
}

/// Trapezoidal (or triangular) rest-to-rest profile over a fixed distance.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Trapezoid {
    accel: f64,
    v_peak: f64,
    t_ramp: f64,
    t_cruise: f64,
}

impl Trapezoid {
    fn new(length: f64, v_target: f64, accel: f64) -> Self {
        let v_peak = if v_target * v_target / accel <= length {
            v_target
        } else {
            (accel * length).sqrt()
        };
        let t_ramp = v_peak / accel;
        let ramp_dist = v_peak * t_ramp;
        let t_cruise = ((length - ramp_dist) / v_peak).max(0.0);
        Self {
            accel,
            v_peak,
            t_ramp,
            t_cruise,
        }
    }

    fn duration(&self) -> f64 {
        2.0 * self.t_ramp + self.t_cruise
    }

    /// (distance, velocity, acceleration) at time `t` into the profile.
    fn state(&self, t: f64) -> (f64, f64, f64) {
        let a = self.accel;
        let half_ramp = 0.5 * self.v_peak * self.t_ramp;
        if t < self.t_ramp {
            (0.5 * a * t * t, a * t, a)
        } else if t < self.t_ramp + self.t_cruise {
            (
                half_ramp + self.v_peak * (t - self.t_ramp),
                self.v_peak,
                0.0,
            )
        } else {
            let td = (t - self.t_ramp - self.t_cruise).min(self.t_ramp);
            let v = (self.v_peak - a * td).max(0.0);
            (
                half_ramp + self.v_peak * self.t_cruise + self.v_peak * td - 0.5 * a * td * td,
                v,
                -a,
            )
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Hover {
        segment: usize,
        end: f64,
    },
    Move {
        segment: usize,
        start: f64,
        end: f64,
        x0: f64,
        profile: Trapezoid,
    },
}

impl Phase {
    fn end(&self) -> f64 {
        match *self {
            Phase::Hover { end, .. } | Phase::Move { end, .. } => end,
        }
    }
}

/// Resolves resolutions, timings and speeds for every segment.
pub fn plan_segments<P>(setup: &SimSetup<P>) -> Result<(f64, f64, Vec<SegmentPlan>), SimError> {
    setup.mission.validate()?;
    setup.body.validate()?;
    setup.curve.validate()?;
    setup.knob.validate(&setup.curve)?;
    if let Some(o) = &setup.offload {
        o.validate()?;
    }
    setup.battery.validate()?;
    for (name, v) in [
        ("perception_s", setup.timing.perception_s),
        ("planning_s", setup.timing.planning_s),
        ("control_s", setup.timing.control_s),
    ] {
        crate::pipeline_models::non_negative(name, v)?;
    }

    let m_total = total_mass(&setup.body, &setup.platform);
    let a_max = max_acceleration(&setup.body, m_total)?;
    let mut plans = Vec::with_capacity(setup.mission.segments.len());
    let mut shortest_stage = f64::INFINITY;
    for seg in &setup.mission.segments {
        let resolution_m = setup.knob.resolution_for(seg.environment)?;
        let passable = passable(seg.gap(), resolution_m.unwrap_or(0.0), setup.body.width_m);
        let mut timing = setup.timing;
        if let Some(r) = resolution_m {
            timing.perception_s = resolution_latency(&setup.curve, r)?;
        }
        if let Some(o) = &setup.offload {
            timing = apply_offload(&timing, o);
        }
        shortest_stage = timing
            .stages()
            .into_iter()
            .filter(|&s| s > 0.0)
            .fold(shortest_stage, f64::min);
        let response_s = response_time_or_ideal(&timing)?;
        let v_cap_mps = v_max_bound(a_max, setup.body.sensing_range_m, response_s)?;
        let v_target_mps = v_cap_mps / seg.sdr.value();
        plans.push(SegmentPlan {
            resolution_m,
            passable,
            timing,
            response_s,
            v_cap_mps,
            v_target_mps,
            hover_s: seg.replans as f64 * timing.planning_s,
        });
    }
    let limit_s = 0.1 * shortest_stage;
    if !(setup.dt_s > 0.0 && setup.dt_s <= limit_s) {
        return Err(SimError::InvalidDt {
            dt_s: setup.dt_s,
            limit_s,
        });
    }
    Ok((m_total, a_max, plans))
}

pub fn simulate<P: RotorPowerModel>(setup: &SimSetup<P>) -> Result<SimTrace, SimError> {
    let (m_total, a_max, plans) = plan_segments(setup)?;
    let dt = setup.dt_s;
    let tdp_w = match &setup.offload {
        Some(o) if o.remote_tdp_excluded => 0.0,
        _ => setup.platform.tdp_w,
    };

    let mut phases = Vec::new();
    let mut t = 0.0;
    let mut x = 0.0;
    let mut blocked = None;
    for (i, (seg, plan)) in setup.mission.segments.iter().zip(&plans).enumerate() {
        if !plan.passable {
            blocked = Some((i, t));
            break;
        }
        if plan.hover_s > 0.0 {
            phases.push(Phase::Hover {
                segment: i,
                end: t + plan.hover_s,
            });
            t += plan.hover_s;
        }
        let profile = Trapezoid::new(seg.length_m, plan.v_target_mps, a_max);
        phases.push(Phase::Move {
            segment: i,
            start: t,
            end: t + profile.duration(),
            x0: x,
            profile,
        });
        t += profile.duration();
        x += seg.length_m;
    }
    let end_t = t;

    let mut events = Vec::new();
    let mut samples = Vec::new();
    let mut battery = setup.battery;
    let mut status = MissionStatus::Completed;
    let mut phase_idx = 0;
    let mut entered: Option<usize> = None;
    let mut planning: Option<usize> = None;
    let mut last_resolution: Option<Option<f64>> = None;

    let mut k: u64 = 0;
    loop {
        let t_k = k as f64 * dt;
        if t_k >= end_t || phases.is_empty() {
            break;
        }
        while phase_idx + 1 < phases.len() && t_k >= phases[phase_idx].end() {
            phase_idx += 1;
        }
        let phase = phases[phase_idx];
        let (segment, hovering, x_k, v_k, a_k) = match phase {
            Phase::Hover { segment, .. } => {
                let x0 = match phases.get(phase_idx + 1) {
                    Some(Phase::Move { x0, .. }) => *x0,
                    _ => 0.0,
                };
                (segment, true, x0, 0.0, 0.0)
            }
            Phase::Move {
                segment,
                start,
                x0,
                profile,
                ..
            } => {
                let (dx, v, a) = profile.state(t_k - start);
                (segment, false, x0 + dx, v, a)
            }
        };

        if entered != Some(segment) {
            let plan = &plans[segment];
            if let Some(prev) = last_resolution {
                if prev != plan.resolution_m {
                    events.push(SimEvent::KnobSwitch {
                        t_s: t_k,
                        from_m: prev,
                        to_m: plan.resolution_m,
                    });
                }
            }
            last_resolution = Some(plan.resolution_m);
            events.push(SimEvent::SegmentEnter {
                t_s: t_k,
                segment,
                resolution_m: plan.resolution_m,
                v_cap_mps: plan.v_cap_mps,
                v_target_mps: plan.v_target_mps,
            });
            entered = Some(segment);
        }
        match (planning, hovering) {
            (None, true) => {
                events.push(SimEvent::PlanStart { t_s: t_k, segment });
                planning = Some(segment);
            }
            (Some(s), false) => {
                events.push(SimEvent::PlanStop {
                    t_s: t_k,
                    segment: s,
                });
                planning = None;
            }
            _ => {}
        }

        let rotor =
            setup
                .power_model
                .rotor_power(&FlightState::horizontal(v_k, a_k.abs(), m_total));
        let power_w = rotor + tdp_w;
        let step = match battery_step(&battery, power_w, dt) {
            Ok(s) => s,
            Err(e @ BatteryError::CurrentLimitExceeded { .. }) => {
                status = MissionStatus::Failed(FailureReason::CurrentLimit);
                events.push(SimEvent::Failure {
                    t_s: t_k,
                    segment,
                    reason: FailureReason::CurrentLimit,
                    detail: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(e.into()),
        };
        samples.push(Sample {
            t_s: t_k,
            x_m: x_k,
            v_mps: v_k,
            power_w,
            charge_c: battery.charge_c,
            a_mps2: a_k,
            hovering,
            segment,
        });
        battery = step.battery;
        k += 1;
        if step.depleted {
            status = MissionStatus::Failed(FailureReason::BatteryEmpty);
            events.push(SimEvent::Failure {
                t_s: k as f64 * dt,
                segment,
                reason: FailureReason::BatteryEmpty,
                detail: format!("battery empty at {:.3} V", battery_voltage(&battery)),
            });
            break;
        }
    }
    if status == MissionStatus::Completed {
        if let Some(s) = planning {
            events.push(SimEvent::PlanStop {
                t_s: k as f64 * dt,
                segment: s,
            });
        }
        if let Some((segment, _)) = blocked {
            let t_fail = k as f64 * dt;
            let plan = &plans[segment];
            events.push(SimEvent::SegmentEnter {
                t_s: t_fail,
                segment,
                resolution_m: plan.resolution_m,
                v_cap_mps: plan.v_cap_mps,
                v_target_mps: plan.v_target_mps,
            });
            events.push(SimEvent::Failure {
                t_s: t_fail,
                segment,
                reason: FailureReason::NoPath,
                detail: format!(
                    "opening of {} m not passable at resolution {} m for a {} m wide drone",
                    setup.mission.segments[segment].gap(),
                    plan.resolution_m.unwrap_or(0.0),
                    setup.body.width_m
                ),
            });
            status = MissionStatus::Failed(FailureReason::NoPath);
        }
    }

    let distance_m = match status {
        MissionStatus::Completed => setup.mission.total_length_m(),
        MissionStatus::Failed(FailureReason::NoPath) => x,
        MissionStatus::Failed(_) => position_at(&phases, k as f64 * dt),
    };
    let mut trace = SimTrace {
        dt_s: dt,
        samples,
        events,
        initial_charge_c: setup.battery.charge_c,
        final_charge_c: battery.charge_c,
        distance_m,
        status,
        summary: SimSummary {
            mission_time_s: 0.0,
            energy_j: 0.0,
            distance_m: 0.0,
            avg_v_mps: 0.0,
            hover_s: 0.0,
            battery_frac_remaining: 1.0,
            status,
        },
    };
    trace.summary = summary_of(&trace);
    Ok(trace)
}

fn position_at(phases: &[Phase], t: f64) -> f64 {
    let mut x = 0.0;
    for phase in phases {
        if let Phase::Move {
            start, x0, profile, ..
        } = *phase
        {
            if t < start {
                break;
            }
            x = x0 + profile.state((t - start).min(profile.duration())).0;
        }
    }
    x
}
