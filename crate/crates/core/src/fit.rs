//! Nonlinear least-squares extraction of rate constants from a sensorgram.
//!
//! The sensorgram phases decouple: the dissociation tail
//! `b + A e^{-k_d (t - τ)}` is fitted first, then the association phase
//! `b + A_∞ (1 - e^{-k_s t})` with the tail's baseline held fixed. Rates
//! are optimized as `ln k` so they stay positive.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iters: usize,
    /// Relative parameter step below which the solver stops.
    pub step_tolerance: f64,
    pub damping_init: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iters: 200,
            step_tolerance: 1e-10,
            damping_init: 1e-3,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be at least 1"));
        }
        if !(self.step_tolerance > 0.0) || !(self.damping_init > 0.0) {
            return Err(Error::invalid("fit", "tolerances must be positive"));
        }
        Ok(())
    }
}

/// Residual vector `model(params) - data` and its Jacobian.
pub trait LeastSquaresProblem {
    fn parameter_count(&self) -> usize;
    fn residual_count(&self) -> usize;
    fn residuals(&self, params: &[f64]) -> DVector<f64>;
    /// `residual_count × parameter_count`.
    fn jacobian(&self, params: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ZeroResidual,
    SmallStep,
    /// Hit `max_iters` before the step tolerance.
    MaxIterations,
    /// No damping level produced a finite, decreasing step.
    Stalled,
    /// The Jacobian does not determine every parameter.
    RankDeficient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Sum of squared residuals after each accepted step, starting with the
    /// initial point.
    pub cost_history: Vec<f64>,
}

fn cost_of(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

/// Levenberg-Marquardt with Marquardt's diagonal scaling.
pub fn lm_solve<P: LeastSquaresProblem>(
    problem: &P,
    init: &[f64],
    cfg: &FitConfig,
) -> Result<LmOutcome> {
    cfg.validate()?;
    let n = problem.parameter_count();
    if init.len() != n {
        return Err(Error::invalid(
            "init",
            format!("expected {n} parameters, got {}", init.len()),
        ));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("init", "initial parameters must be finite"));
    }
    if problem.residual_count() < n {
        return Err(Error::InsufficientData {
            points: problem.residual_count(),
            parameters: n,
        });
    }

    let mut x = DVector::from_column_slice(init);
    let mut r = problem.residuals(x.as_slice());
    let mut cost = cost_of(&r);
    let mut history = vec![cost];
    let mut lambda = cfg.damping_init;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    if cost == 0.0 {
        termination = Termination::ZeroResidual;
    } else if !cost.is_finite() {
        termination = Termination::Stalled;
    } else {
        'outer: while iterations < cfg.max_iters {
            iterations += 1;
            let jac = problem.jacobian(x.as_slice());
            let jtj = jac.transpose() * &jac;
            let gradient = jac.transpose() * &r;
            let scale = damping_diagonal(&jtj);
            loop {
                let mut lhs = jtj.clone();
                for i in 0..n {
                    lhs[(i, i)] += lambda * scale[i];
                }
                let step = match lhs.cholesky() {
                    Some(chol) => -chol.solve(&gradient),
                    None => {
                        lambda *= 10.0;
                        if lambda > 1e20 {
                            termination = Termination::Stalled;
                            break 'outer;
                        }
                        continue;
                    }
                };
                let small = step.norm() <= cfg.step_tolerance * (x.norm() + cfg.step_tolerance);
                let candidate = &x + &step;
                let r_new = problem.residuals(candidate.as_slice());
                let cost_new = cost_of(&r_new);
                if cost_new.is_finite() && cost_new < cost {
                    x = candidate;
                    r = r_new;
                    cost = cost_new;
                    history.push(cost);
                    lambda = (lambda / 3.0).max(1e-15);
                    if small || cost == 0.0 {
                        termination = Termination::SmallStep;
                        break 'outer;
                    }
                    break;
                }
                if small {
                    termination = Termination::SmallStep;
                    break 'outer;
                }
                lambda *= 2.0;
                if lambda > 1e20 {
                    termination = Termination::Stalled;
                    break 'outer;
                }
            }
        }
    }

    let mut converged = matches!(
        termination,
        Termination::ZeroResidual | Termination::SmallStep
    );
    if converged && rank_deficient(&problem.jacobian(x.as_slice())) {
        converged = false;
        termination = Termination::RankDeficient;
    }
    Ok(LmOutcome {
        params: x.iter().copied().collect(),
        converged,
        termination,
        iterations,
        residual_norm: cost.sqrt(),
        cost_history: history,
    })
}

fn damping_diagonal(jtj: &DMatrix<f64>) -> Vec<f64> {
    let diag: Vec<f64> = jtj.diagonal().iter().copied().collect();
    let largest = diag.iter().copied().fold(0.0, f64::max);
    let floor = if largest > 0.0 { largest * 1e-15 } else { 1.0 };
    diag.into_iter().map(|d| d.max(floor)).collect()
}

/// Reciprocal condition number of the diagonally normalized normal matrix.
fn rank_deficient(jac: &DMatrix<f64>) -> bool {
    let jtj = jac.transpose() * jac;
    let n = jtj.nrows();
    let d: Vec<f64> = (0..n).map(|i| jtj[(i, i)]).collect();
    if d.iter().any(|&v| !(v > 0.0)) {
        return true;
    }
    let normalized = DMatrix::from_fn(n, n, |i, j| jtj[(i, j)] / (d[i] * d[j]).sqrt());
    let eig = normalized.symmetric_eigenvalues();
    let max = eig.iter().copied().fold(f64::MIN, f64::max);
    let min = eig.iter().copied().fold(f64::MAX, f64::min);
    !(min > 1e-13 * max)
}

/// `b + A e^{-e^u s}` over `s = t - τ`.
struct DissociationModel<'a> {
    elapsed: Vec<f64>,
    y: &'a [f64],
}

impl LeastSquaresProblem for DissociationModel<'_> {
    fn parameter_count(&self) -> usize {
        3
    }

    fn residual_count(&self) -> usize {
        self.y.len()
    }

    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        let k = p[2].exp();
        DVector::from_iterator(
            self.y.len(),
            self.elapsed
                .iter()
                .zip(self.y)
                .map(|(&s, &y)| p[0] + p[1] * (-k * s).exp() - y),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let k = p[2].exp();
        DMatrix::from_fn(self.y.len(), 3, |i, j| {
            let s = self.elapsed[i];
            let e = (-k * s).exp();
            match j {
                0 => 1.0,
                1 => e,
                _ => -p[1] * s * k * e,
            }
        })
    }
}

/// `b + A (1 - e^{-e^v t})` with `b` held fixed.
struct AssociationModel<'a> {
    t: Vec<f64>,
    y: &'a [f64],
    baseline: f64,
}

impl LeastSquaresProblem for AssociationModel<'_> {
    fn parameter_count(&self) -> usize {
        2
    }

    fn residual_count(&self) -> usize {
        self.y.len()
    }

    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        let k = p[1].exp();
        DVector::from_iterator(
            self.y.len(),
            self.t
                .iter()
                .zip(self.y)
                .map(|(&t, &y)| self.baseline + p[0] * (1.0 - (-k * t).exp()) - y),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let k = p[1].exp();
        DMatrix::from_fn(self.y.len(), 2, |i, j| {
            let t = self.t[i];
            let e = (-k * t).exp();
            match j {
                0 => 1.0 - e,
                _ => p[0] * t * k * e,
            }
        })
    }
}

/// Rate constants and shape recovered from one sensorgram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub k_s: f64,
    pub k_d: f64,
    pub k_a: f64,
    /// `k_s < k_d`, so the closed `k_a` is negative.
    pub k_a_negative: bool,
    pub baseline: f64,
    /// Association plateau deviation A_∞ (signed: M-space signals can fall).
    pub amplitude: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Deterministic warm start for the tail: baseline from the last tenth,
/// rate from a log-linear regression of the normalized decay.
fn dissociation_guess(elapsed: &[f64], y: &[f64]) -> [f64; 3] {
    let n = y.len();
    let tail = (n / 10).max(3).min(n);
    let b0 = mean(&y[n - tail..]);
    let a0 = y[0] - b0;
    let span = elapsed[n - 1] - elapsed[0];
    let fallback = 3.0 / span.max(f64::MIN_POSITIVE);
    // Leading run only: once the decay reaches the noise floor, later
    // excursions above the threshold would flatten the slope.
    let points: Vec<(f64, f64)> = elapsed
        .iter()
        .zip(y)
        .map(|(&s, &v)| (s, (v - b0) / a0))
        .take_while(|&(_, z)| z > 0.2)
        .filter(|&(_, z)| z <= 1.5)
        .map(|(s, z)| (s, z.ln()))
        .collect();
    let k0 = if points.len() >= 2 {
        let sm = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
        let lm = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
        let num: f64 = points.iter().map(|p| (p.0 - sm) * (p.1 - lm)).sum();
        let den: f64 = points.iter().map(|p| (p.0 - sm).powi(2)).sum();
        let slope = num / den;
        if slope < 0.0 && slope.is_finite() {
            -slope
        } else {
            fallback
        }
    } else if n >= 2 && (y[1] - b0) / a0 > 0.0 && (y[1] - b0) / a0 < 1.0 {
        // decay nearly complete by the second sample
        -((y[1] - b0) / a0).ln() / (elapsed[1] - elapsed[0])
    } else {
        fallback
    };
    [b0, if a0 != 0.0 { a0 } else { 1e-12 }, k0.ln()]
}

/// Warm start for the association phase: plateau from the samples just
/// before the switch, rate from the time to reach 63% of it.
fn association_guess(t: &[f64], y: &[f64], baseline: f64) -> [f64; 2] {
    let n = y.len();
    let end = (n / 20).max(3).min(n);
    let plateau = mean(&y[n - end..]) - baseline;
    let horizon = t[n - 1].max(f64::MIN_POSITIVE);
    let t63 = t
        .iter()
        .zip(y)
        .find(|(&ti, &v)| ti > 0.0 && (v - baseline) / plateau >= 1.0 - (-1.0f64).exp())
        .map(|(&ti, _)| ti);
    let k0 = t63.map_or(1.0 / horizon, |ti| 1.0 / ti);
    [if plateau != 0.0 { plateau } else { 1e-12 }, k0.ln()]
}

/// Fits a two-phase sensorgram sampled as `(t, y)` with known switch time.
pub fn fit_sensorgram(
    samples: &[(f64, f64)],
    tau_s: f64,
    l0: f64,
    cfg: &FitConfig,
) -> Result<FitResult> {
    let (assoc, dissoc): (Vec<_>, Vec<_>) = samples.iter().copied().partition(|(t, _)| *t < tau_s);
    if dissoc.len() < 3 {
        return Err(Error::InsufficientData {
            points: dissoc.len(),
            parameters: 3,
        });
    }
    if assoc.len() < 2 {
        return Err(Error::InsufficientData {
            points: assoc.len(),
            parameters: 2,
        });
    }

    let tail_y: Vec<f64> = dissoc.iter().map(|p| p.1).collect();
    let elapsed: Vec<f64> = dissoc.iter().map(|p| p.0 - tau_s).collect();
    let guess = dissociation_guess(&elapsed, &tail_y);
    let tail = lm_solve(
        &DissociationModel {
            elapsed,
            y: &tail_y,
        },
        &guess,
        cfg,
    )?;
    let baseline = tail.params[0];
    let k_d = tail.params[2].exp();

    let rise_t: Vec<f64> = assoc.iter().map(|p| p.0).collect();
    let rise_y: Vec<f64> = assoc.iter().map(|p| p.1).collect();
    let guess = association_guess(&rise_t, &rise_y, baseline);
    let rise = lm_solve(
        &AssociationModel {
            t: rise_t,
            y: &rise_y,
            baseline,
        },
        &guess,
        cfg,
    )?;
    let k_s = rise.params[1].exp();
    let closure = kinetics::close_ka(k_s, k_d, l0)?;

    let residual_norm = (tail.residual_norm.powi(2) + rise.residual_norm.powi(2)).sqrt();
    let finite = k_s.is_finite() && k_d.is_finite() && residual_norm.is_finite();
    Ok(FitResult {
        k_s,
        k_d,
        k_a: closure.k_a,
        k_a_negative: closure.negative,
        baseline,
        amplitude: rise.params[0],
        converged: tail.converged && rise.converged && finite,
        iterations: tail.iterations + rise.iterations,
        residual_norm,
    })
}
