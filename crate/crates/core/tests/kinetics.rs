use approx::assert_relative_eq;
use proptest::prelude::*;
use spr_kinetics::cases;
use spr_kinetics::kinetics::{self, KineticParameters, SensorgramShape};

/// Classical fourth-order Runge-Kutta on dC/dt = k_a (R0 - C) L - k_d C,
/// integrated phase by phase: L = L0 up to the switch time, then L = 0.
fn integrate(kp: &KineticParameters, r0: f64, t_end: f64, h: f64) -> f64 {
    let rk4 = |c0: f64, duration: f64, ligand: f64| {
        let rhs = |c: f64| kp.k_a * (r0 - c) * ligand - kp.k_d * c;
        let steps = (duration / h).ceil() as usize;
        let dt = if steps == 0 {
            0.0
        } else {
            duration / steps as f64
        };
        let mut c = c0;
        for _ in 0..steps {
            let k1 = rhs(c);
            let k2 = rhs(c + dt / 2.0 * k1);
            let k3 = rhs(c + dt / 2.0 * k2);
            let k4 = rhs(c + dt * k3);
            c += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        c
    };
    let bound = rk4(0.0, t_end.min(kp.tau_s), kp.l0);
    rk4(bound, (t_end - kp.tau_s).max(0.0), 0.0)
}

#[test]
fn concentration_matches_ode_integration() {
    let r0 = 1e-9;
    for name in cases::CASE_NAMES {
        let kp = cases::resolve_case(name).unwrap().kinetics;
        for t in [100.0, 250.0, kp.tau_s, kp.tau_s + 150.0, 2.0 * kp.tau_s] {
            let exact = kinetics::complex_concentration(t, &kp, r0);
            let numeric = integrate(&kp, r0, t, 0.05);
            assert_relative_eq!(exact, numeric, max_relative = 1e-8);
        }
    }
}

#[test]
fn linearized_signal_is_affine_in_permittivity() {
    for name in cases::CASE_NAMES {
        let ideal = cases::resolve_case(name).unwrap().ideal().unwrap();
        let x: Vec<f64> = ideal.points.iter().map(|p| p.n_a * p.n_a).collect();
        let y: Vec<f64> = ideal.linearized.iter().map(|p| p.1).collect();
        let n = x.len();
        let span_x = x.iter().cloned().fold(f64::MIN, f64::max) - x[0];
        let span_y = y.iter().cloned().fold(f64::MIN, f64::max) - y[0];
        for i in (0..n).step_by(7) {
            for j in (i + 1..n).step_by(5) {
                for k in (j + 1..n).step_by(3) {
                    let cross = (y[j] - y[i]) * (x[k] - x[i]) - (y[k] - y[i]) * (x[j] - x[i]);
                    assert!(
                        cross.abs() <= 1e-9 * span_x * span_y,
                        "{name}: ({i}, {j}, {k})"
                    );
                }
            }
        }
    }
}

#[test]
fn linearization_keeps_endpoints() {
    let study = cases::resolve_case("kausaite2007").unwrap();
    let ideal = study.ideal().unwrap();
    let at_tau = (study.kinetics.tau_s / study.grid.step) as usize;
    assert_eq!(ideal.linearized[0].1, ideal.points[0].transmittance);
    assert_eq!(
        ideal.linearized[at_tau].1,
        ideal.points[at_tau].transmittance
    );
}

#[test]
fn lahiri_needs_no_calibration() {
    let ideal = cases::resolve_case("lahiri1999").unwrap().ideal().unwrap();
    let full = ideal
        .points
        .iter()
        .map(|p| p.transmittance)
        .fold(f64::MIN, f64::max)
        - ideal.points[0].transmittance;
    let worst = ideal
        .points
        .iter()
        .zip(&ideal.linearized)
        .map(|(p, l)| (p.transmittance - l.1).abs())
        .fold(0.0, f64::max);
    assert!(worst / full < 0.01, "{}", worst / full);
}

#[test]
fn kausaite_needs_calibration() {
    let ideal = cases::resolve_case("kausaite2007")
        .unwrap()
        .ideal()
        .unwrap();
    let raw: Vec<(f64, f64)> = ideal
        .points
        .iter()
        .map(|p| (p.t, p.transmittance))
        .collect();
    let factors = kinetics::calibration_factors(&raw, &ideal.linearized);
    assert_eq!(factors[0].1, 1.0);
    assert!(factors.iter().any(|f| (f.1 - 1.0).abs() > 1e-3));
}

#[test]
fn static_analyte_gives_flat_sensorgram() {
    let study = cases::resolve_case("kausaite2007").unwrap();
    let flat = SensorgramShape {
        amplitude_inf: 0.0,
        ..study.angular
    };
    let points =
        kinetics::reconstruct_transmittance_sensorgram(&flat, &study.stack, &study.grid).unwrap();
    assert!(points
        .iter()
        .all(|p| p.transmittance == points[0].transmittance));
}

proptest! {
    #[test]
    fn sensorgram_rises_then_decays(
        k_s in 1e-4f64..1.0,
        k_d in 1e-4f64..1.0,
        tau in 10.0f64..1000.0,
        a in 1e-3f64..10.0,
    ) {
        let shape = SensorgramShape::new(0.3, a, k_s, k_d, tau).unwrap();
        let mut previous = shape.value(0.0);
        prop_assert_eq!(previous, 0.3);
        for i in 1..200 {
            let t = tau * i as f64 / 200.0;
            let v = shape.value(t);
            prop_assert!(v >= previous);
            previous = v;
        }
        let before = shape.value(tau * (1.0 - 1e-12));
        prop_assert!((shape.value(tau) - before).abs() <= 1e-9 * a);
        let mut previous = shape.value(tau);
        for i in 1..200 {
            let v = shape.value(tau + 5.0 * i as f64);
            prop_assert!(v <= previous);
            previous = v;
        }
    }
}
