//! Closed-form models of the perception / planning / control pipeline and
//! the velocity bound it imposes.
//!
//! A drone that sees obstacles at most `d` metres ahead must be able to stop
//! within whatever distance remains after it has been blind for one
//! snapshot period and then spent the sensing-to-actuation latency reacting.
//! Solving `d - v * response = v^2 / (2 a_max)` for `v` gives the
//! compute-bounded maximum velocity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("{name} must be positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("all pipeline stage latencies are zero")]
    ZeroPipeline,
    #[error("slow-down ratio must be >= 1, got {0}")]
    SlowDownBelowOne(f64),
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ModelError::NonFinite { name, value })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if finite(name, value)? > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::NotPositive { name, value })
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if finite(name, value)? >= 0.0 {
        Ok(value)
    } else {
        Err(ModelError::Negative { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Scheduling {
    #[default]
    Sequential,
    Pipelined,
}

/// Per-stage latencies of the perception / planning / control pipeline, in
/// seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineTiming {
    pub perception_s: f64,
    pub planning_s: f64,
    pub control_s: f64,
    #[serde(default)]
    pub scheduling: Scheduling,
}

impl PipelineTiming {
    pub fn new(
        perception_s: f64,
        planning_s: f64,
        control_s: f64,
        scheduling: Scheduling,
    ) -> Result<Self, ModelError> {
        let t = Self {
            perception_s,
            planning_s,
            control_s,
            scheduling,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn sequential(perception_s: f64, planning_s: f64, control_s: f64) -> Self {
        Self {
            perception_s,
            planning_s,
            control_s,
            scheduling: Scheduling::Sequential,
        }
    }

    pub fn pipelined(perception_s: f64, planning_s: f64, control_s: f64) -> Self {
        Self {
            scheduling: Scheduling::Pipelined,
            ..Self::sequential(perception_s, planning_s, control_s)
        }
    }

    /// A timing with a single lumped stage, e.g. a measured end-to-end latency.
    pub fn single_stage(latency_s: f64, scheduling: Scheduling) -> Self {
        Self {
            perception_s: latency_s,
            planning_s: 0.0,
            control_s: 0.0,
            scheduling,
        }
    }

    /// Checks every stage is finite and non-negative, and at least one is positive.
    pub fn validate(&self) -> Result<(), ModelError> {
        non_negative("perception_s", self.perception_s)?;
        non_negative("planning_s", self.planning_s)?;
        non_negative("control_s", self.control_s)?;
        if self.is_zero() {
            return Err(ModelError::ZeroPipeline);
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.perception_s == 0.0 && self.planning_s == 0.0 && self.control_s == 0.0
    }

    pub fn stages(&self) -> [f64; 3] {
        [self.perception_s, self.planning_s, self.control_s]
    }

    pub fn slowest_stage_s(&self) -> f64 {
        self.stages().into_iter().fold(0.0, f64::max)
    }
}

/// Latency, throughput, blind time and response time of a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseProfile {
    pub sa_latency_s: f64,
    pub sa_throughput_hz: f64,
    pub blind_s: f64,
    pub response_s: f64,
}

impl ResponseProfile {
    /// Builds a profile from a measured latency and throughput.
    pub fn from_measured(sa_latency_s: f64, sa_throughput_hz: f64) -> Result<Self, ModelError> {
        positive("sa_latency_s", sa_latency_s)?;
        positive("sa_throughput_hz", sa_throughput_hz)?;
        let blind_s = 1.0 / sa_throughput_hz;
        Ok(Self {
            sa_latency_s,
            sa_throughput_hz,
            blind_s,
            response_s: sa_latency_s + blind_s,
        })
    }
}

pub fn sa_latency(t: &PipelineTiming) -> f64 {
    t.perception_s + t.planning_s + t.control_s
}

pub fn response_profile(t: &PipelineTiming) -> Result<ResponseProfile, ModelError> {
    t.validate()?;
    let latency = sa_latency(t);
    let blind_s = match t.scheduling {
        Scheduling::Sequential => latency,
        // overlapping stages: a new snapshot every slowest-stage period
        Scheduling::Pipelined => t.slowest_stage_s(),
    };
    Ok(ResponseProfile {
        sa_latency_s: latency,
        sa_throughput_hz: 1.0 / blind_s,
        blind_s,
        response_s: latency + blind_s,
    })
}

/// Response time of a timing, with an all-zero pipeline meaning an ideal
/// (instantaneous) compute subsystem.
pub fn response_time_or_ideal(t: &PipelineTiming) -> Result<f64, ModelError> {
    if t.is_zero() {
        return Ok(0.0);
    }
    Ok(response_profile(t)?.response_s)
}

/// Maximum velocity that still lets the drone stop inside its sensing range.
pub fn v_max_bound(a_max: f64, d: f64, response_s: f64) -> Result<f64, ModelError> {
    positive("a_max", a_max)?;
    non_negative("d", d)?;
    non_negative("response_s", response_s)?;
    if response_s == 0.0 {
        return Ok((2.0 * a_max * d).sqrt());
    }
    // a (sqrt(r^2 + 2d/a) - r), rewritten as 2d / (sqrt(r^2 + 2d/a) + r)
    // to avoid cancellation when r^2 >> 2d/a
    let root = (response_s * response_s + 2.0 * d / a_max).sqrt();
    Ok(2.0 * d / (root + response_s))
}

/// Closed-form partial derivative of [`v_max_bound`] with respect to the
/// response time.
pub fn v_max_response_derivative(a_max: f64, d: f64, response_s: f64) -> Result<f64, ModelError> {
    positive("a_max", a_max)?;
    non_negative("d", d)?;
    non_negative("response_s", response_s)?;
    let root = (response_s * response_s + 2.0 * d / a_max).sqrt();
    if root == 0.0 {
        return Ok(-a_max);
    }
    Ok(a_max * (response_s / root - 1.0))
}

/// `v_max` for a sequential pipeline whose sensing-to-actuation latency is
/// `latency_s`; the response time is twice the latency.
pub fn v_max_sequential(a_max: f64, d: f64, latency_s: f64) -> Result<f64, ModelError> {
    non_negative("latency_s", latency_s)?;
    v_max_bound(a_max, d, 2.0 * latency_s)
}

pub fn stopping_distance(v: f64, a_max: f64) -> Result<f64, ModelError> {
    non_negative("v", v)?;
    positive("a_max", a_max)?;
    Ok(v * v / (2.0 * a_max))
}

/// Distance left to an obstacle that appeared right after a snapshot, once
/// the drone has flown blind and then through the whole pipeline. Negative
/// means the drone cannot stop in time at speed `v`.
pub fn worst_case_clearance(d: f64, v: f64, profile: &ResponseProfile) -> f64 {
    d - v * profile.blind_s - v * profile.sa_latency_s
}

/// Slow-down ratio `v_max / v_avg`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SlowDownRatio(f64);

impl SlowDownRatio {
    pub fn new(sdr: f64) -> Result<Self, ModelError> {
        finite("sdr", sdr)?;
        if sdr < 1.0 {
            return Err(ModelError::SlowDownBelowOne(sdr));
        }
        Ok(Self(sdr))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SlowDownRatio {
    type Error = ModelError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<SlowDownRatio> for f64 {
    fn from(s: SlowDownRatio) -> f64 {
        s.0
    }
}

pub fn avg_velocity(v_max: f64, sdr: SlowDownRatio) -> Result<f64, ModelError> {
    non_negative("v_max", v_max)?;
    Ok(v_max / sdr.0)
}

pub fn mission_time(path_length_m: f64, v_avg: f64) -> Result<f64, ModelError> {
    non_negative("path_length_m", path_length_m)?;
    positive("v_avg", v_avg)?;
    Ok(path_length_m / v_avg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn latency_is_stage_sum() {
        assert!(close(
            sa_latency(&PipelineTiming::sequential(0.1, 0.3, 0.05)),
            0.45,
            1e-12
        ));
        assert_eq!(
            sa_latency(&PipelineTiming::sequential(0.0, 0.0, 0.02)),
            0.02
        );
        assert_eq!(
            sa_latency(&PipelineTiming::single_stage(0.243, Scheduling::Sequential)),
            0.243
        );
    }

    #[test]
    fn sequential_and_pipelined_profiles() {
        let seq = response_profile(&PipelineTiming::sequential(0.1, 0.3, 0.05)).unwrap();
        assert!(close(seq.response_s, 0.90, 1e-12));
        assert!(close(seq.blind_s, 0.45, 1e-12));
        let pipe = response_profile(&PipelineTiming::pipelined(0.1, 0.3, 0.05)).unwrap();
        assert!(close(pipe.blind_s, 0.30, 1e-12));
        assert!(close(pipe.response_s, 0.75, 1e-12));
        assert_eq!(
            response_profile(&PipelineTiming::sequential(0.0, 0.0, 0.0)),
            Err(ModelError::ZeroPipeline)
        );
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn measured_profile_matches_table_total() {
        let p = ResponseProfile::from_measured(0.243, 13.3).unwrap();
        assert!(close(p.response_s, 0.318, 0.001));
    }

    #[test]
    fn v_max_examples() {
        assert!(close(v_max_bound(9.8, 6.98, 0.0).unwrap(), 11.70, 0.005));
        assert!(close(v_max_bound(2.21, 6.98, 0.0).unwrap(), 5.55, 0.15));
        assert!(close(v_max_bound(5.28, 6.98, 0.650).unwrap(), 5.81, 0.01));
        assert_eq!(v_max_bound(3.0, 0.0, 0.0).unwrap(), 0.0);
        assert!(v_max_bound(f64::NAN, 1.0, 0.0).is_err());
        assert!(v_max_bound(1.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn stopping_distance_examples() {
        assert!(close(stopping_distance(11.70, 9.8).unwrap(), 6.98, 0.005));
        assert_eq!(stopping_distance(0.0, 5.0).unwrap(), 0.0);
        assert_eq!(stopping_distance(10.0, 5.0).unwrap(), 10.0);
        assert!(stopping_distance(1.0, 0.0).is_err());
    }

    #[test]
    fn clearance_closes_the_loop() {
        let profile = ResponseProfile::from_measured(0.426, 4.46).unwrap();
        let a = 5.28;
        let v = v_max_bound(a, 6.98, profile.response_s).unwrap();
        let c = worst_case_clearance(6.98, v, &profile);
        assert!(close(c, stopping_distance(v, a).unwrap(), 1e-9));
        assert_eq!(worst_case_clearance(10.0, 0.0, &profile), 10.0);
        let p = ResponseProfile {
            sa_latency_s: 0.1,
            sa_throughput_hz: 10.0,
            blind_s: 0.1,
            response_s: 0.2,
        };
        assert!(close(worst_case_clearance(1.0, 10.0, &p), -1.0, 1e-12));
    }

    #[test]
    fn slow_down_and_mission_time() {
        let s4 = SlowDownRatio::new(4.0).unwrap();
        assert!(close(avg_velocity(11.7, s4).unwrap(), 2.925, 1e-12));
        assert_eq!(
            avg_velocity(5.0, SlowDownRatio::new(1.0).unwrap()).unwrap(),
            5.0
        );
        assert_eq!(
            avg_velocity(0.0, SlowDownRatio::new(3.0).unwrap()).unwrap(),
            0.0
        );
        assert!(SlowDownRatio::new(0.9).is_err());

        let t = mission_time(1000.0, avg_velocity(11.7, s4).unwrap()).unwrap();
        assert!(close(t, 341.9, 0.05));
        assert!((t - 341.0).abs() / 341.0 <= 0.01);
        let t = mission_time(1000.0, 5.6 / 4.0).unwrap();
        assert!(close(t, 714.3, 0.05));
        let t = mission_time(1000.0, 5.81 / 4.0).unwrap();
        assert!(close(t, 688.5, 0.05));
        assert!(mission_time(1000.0, 0.0).is_err());
    }

    #[test]
    fn sdr_deserializes_with_validation() {
        let s: SlowDownRatio = serde_json::from_str("2.5").unwrap();
        assert_eq!(s.value(), 2.5);
        assert!(serde_json::from_str::<SlowDownRatio>("0.5").is_err());
    }
}
