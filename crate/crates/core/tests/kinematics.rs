use codesign_core::pipeline_models::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn accel() -> impl Strategy<Value = f64> {
    0.1f64..30.0
}

fn range() -> impl Strategy<Value = f64> {
    0.5f64..50.0
}

fn response() -> impl Strategy<Value = f64> {
    0.0f64..5.0
}

proptest! {
    #[test]
    fn v_max_decreases_with_response(a in accel(), d in range(), r in response(), dr in 1e-3f64..2.0) {
        prop_assert!(v_max_bound(a, d, r + dr).unwrap() < v_max_bound(a, d, r).unwrap());
    }

    #[test]
    fn v_max_increases_with_range_and_accel(a in accel(), d in range(), r in response(), k in 1.001f64..3.0) {
        let v = v_max_bound(a, d, r).unwrap();
        prop_assert!(v_max_bound(a, d * k, r).unwrap() > v);
        prop_assert!(v_max_bound(a * k, d, r).unwrap() > v);
    }

    #[test]
    fn zero_response_is_free_fall_speed(a in accel(), d in range()) {
        prop_assert_eq!(v_max_bound(a, d, 0.0).unwrap(), (2.0 * a * d).sqrt());
    }

    #[test]
    fn bound_satisfies_stopping_equation(a in accel(), d in range(), r in response()) {
        let v = v_max_bound(a, d, r).unwrap();
        // d = v r + v^2 / 2a
        prop_assert!(rel(d - v * r, v * v / (2.0 * a)) < 1e-9);
        prop_assert!(rel(v * r + stopping_distance(v, a).unwrap(), d) < 1e-12);
    }

    #[test]
    fn sequential_form_matches_general(a in accel(), d in range(), l in 0.0f64..2.5) {
        let v = v_max_sequential(a, d, l).unwrap();
        prop_assert_eq!(v, v_max_bound(a, d, 2.0 * l).unwrap());
        // textbook form a (sqrt(4 L^2 + 2 d / a) - 2 L)
        let direct = a * ((4.0 * l * l + 2.0 * d / a).sqrt() - 2.0 * l);
        prop_assert!(rel(v, direct) < 1e-9);
    }

    #[test]
    fn pipelining_never_slows(a in accel(), d in range(),
                             p in 0.01f64..1.0, pl in 0.01f64..1.0, c in 0.01f64..1.0) {
        let seq = response_profile(&PipelineTiming::sequential(p, pl, c)).unwrap();
        let pipe = response_profile(&PipelineTiming::pipelined(p, pl, c)).unwrap();
        prop_assert_eq!(seq.sa_latency_s, pipe.sa_latency_s);
        prop_assert!(pipe.response_s <= seq.response_s);
        prop_assert!(v_max_bound(a, d, pipe.response_s).unwrap() >= v_max_bound(a, d, seq.response_s).unwrap());
    }

    #[test]
    fn blind_time_is_inverse_throughput(p in 0.01f64..1.0, pl in 0.01f64..1.0, c in 0.01f64..1.0, pipe: bool) {
        let t = if pipe { PipelineTiming::pipelined(p, pl, c) } else { PipelineTiming::sequential(p, pl, c) };
        let prof = response_profile(&t).unwrap();
        prop_assert!(rel(prof.blind_s * prof.sa_throughput_hz, 1.0) <= f64::EPSILON);
    }

    #[test]
    fn mission_time_composes(l in 1.0f64..1e4, v in 0.1f64..30.0, s in 1.0f64..10.0) {
        let sdr = SlowDownRatio::new(s).unwrap();
        let t = mission_time(l, avg_velocity(v, sdr).unwrap()).unwrap();
        prop_assert!(rel(t, l * s / v) <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn derivative_matches_central_difference(a in accel(), d in range(), r in 0.05f64..5.0) {
        let h = 1e-6 * r.max(1.0);
        let fd = (v_max_bound(a, d, r + h).unwrap() - v_max_bound(a, d, r - h).unwrap()) / (2.0 * h);
        let exact = v_max_response_derivative(a, d, r).unwrap();
        prop_assert!(exact < 0.0);
        prop_assert!(rel(fd, exact) < 1e-5, "fd {fd} exact {exact}");
    }
}

#[test]
fn invalid_arguments_are_rejected() {
    assert!(v_max_bound(0.0, 1.0, 0.1).is_err());
    assert!(v_max_bound(1.0, -1.0, 0.1).is_err());
    assert!(v_max_bound(1.0, 1.0, f64::NAN).is_err());
    assert!(SlowDownRatio::new(0.5).is_err());
    assert!(mission_time(100.0, 0.0).is_err());
}
