use nalgebra::{DMatrix, DVector};
use spr_kinetics::cases;
use spr_kinetics::fit::{self, FitConfig, LeastSquaresProblem};
use spr_kinetics::kinetics::{SensorgramShape, TimeGrid};

fn sample(shape: &SensorgramShape, grid: &TimeGrid) -> Vec<(f64, f64)> {
    grid.times()
        .into_iter()
        .map(|t| (t, shape.value(t)))
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn recovers_generating_rates_on_a_log_grid() {
    let grids = [
        (TimeGrid::new(0.0, 2200.0, 10.0).unwrap(), 1100.0),
        (TimeGrid::new(0.0, 1000.0, 5.0).unwrap(), 300.0),
    ];
    let rates: Vec<f64> = (0..=8).map(|i| 10f64.powf(-4.0 + 0.5 * i as f64)).collect();
    let mut failures = Vec::new();
    for (grid, tau) in &grids {
        for &k_s in &rates {
            for &k_d in &rates {
                let shape = SensorgramShape::new(0.3, 0.2, k_s, k_d, *tau).unwrap();
                let fit =
                    fit::fit_sensorgram(&sample(&shape, grid), *tau, 1.0, &FitConfig::default())
                        .unwrap();
                if !fit.converged || rel(fit.k_s, k_s) > 1e-6 || rel(fit.k_d, k_d) > 1e-6 {
                    failures.push(format!(
                        "tau {tau}: ({k_s:.1e}, {k_d:.1e}) -> ({:.6e}, {:.6e}) converged {}",
                        fit.k_s, fit.k_d, fit.converged
                    ));
                }
            }
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn rates_are_invariant_under_affine_rescaling() {
    let ideal = cases::resolve_case("kausaite2007")
        .unwrap()
        .ideal()
        .unwrap();
    let base = fit::fit_sensorgram(&ideal.signal, 1100.0, 274e-9, &FitConfig::default()).unwrap();
    for (c1, c2) in [(-5.0, 10.0), (3.0, -7.5), (1e3, 0.01)] {
        let scaled: Vec<(f64, f64)> = ideal
            .signal
            .iter()
            .map(|&(t, y)| (t, c1 + c2 * y))
            .collect();
        let fit = fit::fit_sensorgram(&scaled, 1100.0, 274e-9, &FitConfig::default()).unwrap();
        assert!(fit.converged);
        assert!(rel(fit.k_s, base.k_s) < 1e-8, "{} vs {}", fit.k_s, base.k_s);
        assert!(rel(fit.k_d, base.k_d) < 1e-8, "{} vs {}", fit.k_d, base.k_d);
        assert!(rel(fit.baseline, c1 + c2 * base.baseline) < 1e-8);
    }
}

#[test]
fn published_case_rates() {
    let kausaite = cases::resolve_case("kausaite2007").unwrap();
    let ideal = kausaite.ideal().unwrap();
    let f = fit::fit_sensorgram(
        &ideal.signal,
        1100.0,
        kausaite.kinetics.l0,
        &FitConfig::default(),
    )
    .unwrap();
    assert!(
        rel(f.k_s, 0.0105) < 0.02 && rel(f.k_d, 7.771e-3) < 0.02 && rel(f.k_a, 10.029e3) < 0.02,
        "{f:?}"
    );

    let lahiri = cases::resolve_case("lahiri1999").unwrap();
    let ideal = lahiri.ideal().unwrap();
    let f = fit::fit_sensorgram(
        &ideal.signal,
        300.0,
        lahiri.kinetics.l0,
        &FitConfig::default(),
    )
    .unwrap();
    assert!(
        rel(f.k_s, 22.98e-3) < 5e-3 && rel(f.k_d, 15e-3) < 5e-3 && rel(f.k_a, 3.8e-3) < 5e-3,
        "{f:?}"
    );
}

/// y = a e^{-k t} + c, deliberately started far from the answer.
struct Offset {
    t: Vec<f64>,
    y: Vec<f64>,
}

impl LeastSquaresProblem for Offset {
    fn parameter_count(&self) -> usize {
        3
    }
    fn residual_count(&self) -> usize {
        self.t.len()
    }
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.t.len(),
            self.t
                .iter()
                .zip(&self.y)
                .map(|(&t, &y)| p[0] * (-p[1] * t).exp() + p[2] - y),
        )
    }
    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.t.len(), 3, |i, j| {
            let t = self.t[i];
            let e = (-p[1] * t).exp();
            match j {
                0 => e,
                1 => -p[0] * t * e,
                _ => 1.0,
            }
        })
    }
}

#[test]
fn accepted_steps_decrease_cost() {
    let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.25).collect();
    let y: Vec<f64> = t
        .iter()
        .enumerate()
        .map(|(i, t)| 2.0 * (-0.3 * t).exp() + 0.5 + 0.01 * ((i * 7919) % 13) as f64 / 13.0)
        .collect();
    let out = fit::lm_solve(&Offset { t, y }, &[10.0, 2.0, -3.0], &FitConfig::default()).unwrap();
    assert!(out.converged, "{:?}", out.termination);
    assert!(out.cost_history.len() > 2);
    assert!(out.cost_history.windows(2).all(|w| w[1] < w[0]));
    assert!(out.iterations <= FitConfig::default().max_iters);
    assert!(out.residual_norm.is_finite());
}
