use codesign_core::dse::*;
use codesign_core::pipeline_models::{v_max_bound, v_max_response_derivative, SlowDownRatio};
use codesign_core::vehicle_dynamics::{max_acceleration, AffineHoverPower, DroneBody, PowerModel};
use proptest::prelude::*;

fn mission(sdr: f64) -> SweepMission {
    SweepMission {
        path_length_m: 1000.0,
        sdr: SlowDownRatio::new(sdr).unwrap(),
    }
}

fn constraints() -> impl Strategy<Value = Constraints> {
    (0.2f64..1.6, 1e5f64..1e6, 30.0f64..120.0).prop_map(|(payload, energy, current)| Constraints {
        payload_max_kg: payload,
        battery_energy_j: energy,
        current_limit_a: current,
        nominal_voltage_v: 11.1,
    })
}

fn grid() -> impl Strategy<Value = DesignGrid> {
    (2usize..7, 2usize..6, 2usize..7, 0.05f64..0.5, 0.1f64..0.5).prop_map(|(nm, np, nr, m0, r0)| {
        DesignGrid {
            mass_kg: AxisRange::new(m0, 1.6, nm),
            power_w: AxisRange::new(5.0, 300.0, np),
            response_s: AxisRange::new(r0, 2.5, nr),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mission_time_ignores_power(g in grid(), c in constraints(), sdr in 1.0f64..6.0) {
        let s = sweep(&g, &DroneBody::dji_m100(), &mission(sdr), &c, &PowerModel::dji_affine()).unwrap();
        let (np, nr) = (g.power_w.steps, g.response_s.steps);
        for block in s.chunks(np * nr) {
            for j in 0..nr {
                let t0 = block[j].mission_time_s;
                for i in 1..np {
                    let t = block[i * nr + j].mission_time_s;
                    prop_assert!(t == t0 || (t.is_nan() && t0.is_nan()));
                }
            }
        }
    }

    #[test]
    fn feasible_area_shrinks_with_power(g in grid(), c in constraints()) {
        let s = sweep(&g, &DroneBody::dji_m100(), &mission(4.0), &c, &PowerModel::dji_affine()).unwrap();
        let counts = feasible_counts(&s, Axis::Power);
        prop_assert_eq!(counts.len(), g.power_w.steps);
        for w in counts.windows(2) {
            prop_assert!(w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn energy_grows_with_power(g in grid(), c in constraints()) {
        let s = sweep(&g, &DroneBody::dji_m100(), &mission(4.0), &c, &PowerModel::dji_affine()).unwrap();
        let (np, nr) = (g.power_w.steps, g.response_s.steps);
        for block in s.chunks(np * nr) {
            for j in 0..nr {
                for i in 1..np {
                    let (a, b) = (&block[(i - 1) * nr + j], &block[i * nr + j]);
                    if a.mission_time_s.is_finite() {
                        prop_assert!(b.energy_j > a.energy_j);
                    }
                }
            }
        }
    }

    #[test]
    fn sweep_is_pointwise(g in grid(), c in constraints()) {
        let body = DroneBody::dji_m100();
        let model = PowerModel::dji_affine();
        let s = sweep(&g, &body, &mission(3.0), &c, &model).unwrap();
        prop_assert_eq!(s.len(), g.len());
        // evaluate in reverse order; results must not depend on order
        for smp in s.iter().rev() {
            let again = evaluate_point(&body, &mission(3.0), &c, &model, smp.mass_kg, smp.power_w, smp.response_s).unwrap();
            prop_assert!(same(smp, &again));
            prop_assert_eq!(smp.feasible, smp.infeasibility_reason.is_none());
            if smp.feasible {
                prop_assert!(smp.mission_time_s.is_finite() && smp.energy_j.is_finite());
            }
        }
    }

    #[test]
    fn linear_field_gradient_is_exact(k1 in -50.0f64..50.0, k2 in -50.0f64..50.0,
                                      xs in prop::collection::btree_set(0u32..1000, 2..8),
                                      ys in prop::collection::btree_set(0u32..1000, 2..8)) {
        let xs: Vec<f64> = xs.into_iter().map(|x| x as f64 / 100.0).collect();
        let ys: Vec<f64> = ys.into_iter().map(|y| 0.05 + y as f64 / 100.0).collect();
        let mut samples = Vec::new();
        for &x in &xs {
            for &y in &ys {
                let f = 7.0 + k1 * x + k2 * y;
                samples.push(FieldSample {
                    mass_kg: x, power_w: 20.0, response_s: y,
                    mission_time_s: f, energy_j: f, feasible: true, infeasibility_reason: None,
                });
            }
        }
        let gf = gradient_field(&samples, Metric::Energy, (Axis::Mass, Axis::Response)).unwrap();
        for cell in &gf.cells {
            prop_assert!(cell.defined);
            prop_assert!((cell.grad1 - k1).abs() <= 1e-9 * (1.0 + k1.abs()));
            prop_assert!((cell.grad2 - k2).abs() <= 1e-9 * (1.0 + k2.abs()));
        }
    }
}

fn same(a: &FieldSample, b: &FieldSample) -> bool {
    let eq = |x: f64, y: f64| x == y || (x.is_nan() && y.is_nan());
    eq(a.mission_time_s, b.mission_time_s)
        && eq(a.energy_j, b.energy_j)
        && a.feasible == b.feasible
        && a.infeasibility_reason == b.infeasibility_reason
}

fn roomy() -> Constraints {
    Constraints {
        payload_max_kg: 1.5,
        battery_energy_j: 1e9,
        current_limit_a: 1e4,
        nominal_voltage_v: 11.1,
    }
}

#[test]
fn tx2_point_matches_direct_composition() {
    let body = DroneBody::dji_m100();
    let model = AffineHoverPower::dji_m100_calibrated();
    let s = evaluate_point(&body, &mission(4.0), &roomy(), &model, 0.144, 15.0, 1.119).unwrap();
    let a = max_acceleration(&body, 2.544).unwrap();
    let v = v_max_bound(a, 6.98, 1.119).unwrap();
    let t = 1000.0 * 4.0 / v;
    assert!((s.mission_time_s - t).abs() <= 1e-9 * t);
    // the calibrated line passes through 506 W at the TX2 mass
    assert!((s.energy_j - (506.0 + 15.0) * t).abs() <= 1e-9 * s.energy_j);
    assert!(s.feasible);
}

#[test]
fn mission_time_gradient_follows_closed_form() {
    let body = DroneBody::dji_m100();
    let grid = DesignGrid {
        mass_kg: AxisRange::new(0.1, 0.9, 9),
        power_w: AxisRange::new(10.0, 100.0, 3),
        response_s: AxisRange::new(0.1, 2.0, 39),
    };
    let s = sweep(
        &grid,
        &body,
        &mission(4.0),
        &roomy(),
        &AffineHoverPower::dji_m100_calibrated(),
    )
    .unwrap();
    let slice = slice(&s, Axis::Power, 10.0);
    let g = gradient_field(&slice, Metric::MissionTime, (Axis::Mass, Axis::Response)).unwrap();
    let mut checked = 0;
    for i in 1..g.values1.len() - 1 {
        for j in 1..g.values2.len() - 1 {
            let c = g.at(i, j);
            assert!(c.defined);
            let a = max_acceleration(&body, body.base_mass_kg + c.x1).unwrap();
            let v = v_max_bound(a, body.sensing_range_m, c.x2).unwrap();
            let dv = v_max_response_derivative(a, body.sensing_range_m, c.x2).unwrap();
            let exact = -1000.0 * 4.0 * dv / (v * v);
            assert!(
                (c.grad2 - exact).abs() <= 0.02 * exact.abs(),
                "{} vs {exact}",
                c.grad2
            );
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn sensitivity_zero_for_power_positive_for_response() {
    let grid = DesignGrid {
        mass_kg: AxisRange::new(0.1, 1.0, 6),
        power_w: AxisRange::new(5.0, 200.0, 6),
        response_s: AxisRange::new(0.1, 2.0, 8),
    };
    let s = sweep(
        &grid,
        &DroneBody::dji_m100(),
        &mission(4.0),
        &roomy(),
        &PowerModel::dji_affine(),
    )
    .unwrap();
    let p = sensitivity(&s, Metric::MissionTime, Axis::Power).unwrap();
    assert_eq!((p.mean, p.std), (0.0, 0.0));
    assert!(
        sensitivity(&s, Metric::MissionTime, Axis::Response)
            .unwrap()
            .mean
            > 0.0
    );
    assert!(sensitivity(&s, Metric::Energy, Axis::Power).unwrap().mean > 0.0);
}
