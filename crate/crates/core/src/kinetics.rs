//! Pseudo-first-order receptor-ligand binding, the piecewise exponential
//! sensorgram, and the angular-to-transmittance reconstruction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{self, AnalyteIndex, OpticalStack};

/// Rate constants of a binding experiment.
///
/// `k_a` in M⁻¹s⁻¹, `k_d` in s⁻¹, `l0` (initial ligand concentration) in M,
/// `tau_s` (switch from ligand injection to buffer) in s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticParameters {
    pub k_a: f64,
    pub k_d: f64,
    pub l0: f64,
    pub tau_s: f64,
}

impl KineticParameters {
    pub fn new(k_a: f64, k_d: f64, l0: f64, tau_s: f64) -> Result<Self> {
        let kp = KineticParameters {
            k_a,
            k_d,
            l0,
            tau_s,
        };
        kp.validate()?;
        Ok(kp)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_a", self.k_a),
            ("k_d", self.k_d),
            ("l0", self.l0),
            ("tau_s", self.tau_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("{v} must be positive")));
            }
        }
        Ok(())
    }

    /// Observed association-phase rate `k_s = k_a L0 + k_d`.
    pub fn k_s(&self) -> f64 {
        self.k_a * self.l0 + self.k_d
    }

    /// Dissociation equilibrium constant `K_D = k_d / k_a` (M).
    pub fn dissociation_equilibrium(&self) -> f64 {
        self.k_d / self.k_a
    }

    /// Affinity `K_A = 1 / K_D` (M⁻¹).
    pub fn affinity(&self) -> f64 {
        self.k_a / self.k_d
    }
}

/// Complex concentration [C](t) for receptor concentration `r0`, with the
/// ligand in large excess (`l0 >> r0`, not checked).
pub fn complex_concentration(t: f64, kp: &KineticParameters, r0: f64) -> f64 {
    let plateau = kp.l0 * r0 / (kp.l0 + kp.dissociation_equilibrium());
    let association = |t: f64| plateau * (1.0 - (-kp.k_s() * t).exp());
    if t < kp.tau_s {
        association(t.max(0.0))
    } else {
        association(kp.tau_s) * (-kp.k_d * (t - kp.tau_s)).exp()
    }
}

/// Piecewise exponential sensorgram with a buffer-level baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorgramShape {
    pub baseline: f64,
    /// Asymptotic deviation (T_∞ for transmittance, A_∞ degrees for angle).
    pub amplitude_inf: f64,
    pub k_s: f64,
    pub k_d: f64,
    pub tau_s: f64,
}

impl SensorgramShape {
    pub fn new(baseline: f64, amplitude_inf: f64, k_s: f64, k_d: f64, tau_s: f64) -> Result<Self> {
        if !(amplitude_inf > 0.0) {
            return Err(Error::invalid("amplitude_inf", "must be positive"));
        }
        for (name, v) in [("k_s", k_s), ("k_d", k_d), ("tau_s", tau_s)] {
            if !(v > 0.0) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        Ok(SensorgramShape {
            baseline,
            amplitude_inf,
            k_s,
            k_d,
            tau_s,
        })
    }

    /// Deviation reached at the switch time, `A_∞ (1 - e^{-k_s τ})`.
    pub fn amplitude_at_switch(&self) -> f64 {
        self.amplitude_inf * (1.0 - (-self.k_s * self.tau_s).exp())
    }

    pub fn value(&self, t: f64) -> f64 {
        ideal_sensorgram(t, self)
    }
}

pub fn ideal_sensorgram(t: f64, shape: &SensorgramShape) -> f64 {
    let deviation = if t < shape.tau_s {
        shape.amplitude_inf * (1.0 - (-shape.k_s * t).exp())
    } else {
        shape.amplitude_at_switch() * (-shape.k_d * (t - shape.tau_s)).exp()
    };
    shape.baseline + deviation
}

/// Uniform sampling grid, end point included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, step: f64) -> Result<Self> {
        let grid = TimeGrid {
            t_start,
            t_end,
            step,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::invalid("step", "must be positive"));
        }
        if !(self.t_end > self.t_start) {
            return Err(Error::invalid("t_end", "must exceed t_start"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.t_end - self.t_start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.t_start + self.step * i as f64)
            .collect()
    }
}

/// Index of the grid sample sitting at the switch time.
pub fn switch_index(times: &[f64], tau_s: f64) -> Result<usize> {
    let step = match times {
        [a, b, ..] => (b - a).abs(),
        _ => f64::INFINITY,
    };
    times
        .iter()
        .position(|&t| (t - tau_s).abs() <= 1e-6 * step.max(1.0))
        .ok_or(Error::MissingSwitchSample { tau_s })
}

/// One sample of a reconstructed sensorgram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedPoint {
    pub t: f64,
    pub theta_deg: f64,
    pub n_a: f64,
    pub transmittance: f64,
}

/// Maps an angular sensorgram (baseline = resonance angle of the buffer)
/// onto the transmittance seen at the stack's fixed interrogation angle.
pub fn reconstruct_transmittance_sensorgram(
    angular: &SensorgramShape,
    stack: &OpticalStack,
    grid: &TimeGrid,
) -> Result<Vec<ReconstructedPoint>> {
    stack.validate()?;
    grid.validate()?;
    let n_metal_sq = stack.metal_permittivity_re();
    grid.times()
        .into_iter()
        .map(|t| {
            let theta_deg = angular.value(t);
            let n_a = optics::index_from_angle(theta_deg, n_metal_sq, stack.n_prism)?;
            let transmittance = optics::transmittance(stack, AnalyteIndex::new(n_a)?);
            Ok(ReconstructedPoint {
                t,
                theta_deg,
                n_a,
                transmittance,
            })
        })
        .collect()
}

/// Linear-in-permittivity calibration of a transmittance sensorgram:
/// `T_L(t) = T(0) + (T(τ) - T(0)) / (n_a²(τ) - n_a²(0)) · (n_a²(t) - n_a²(0))`.
///
/// `raw` holds (t, T) and `index_trace` holds (t, n_a) on the same grid.
pub fn linearize_sensorgram(
    raw: &[(f64, f64)],
    index_trace: &[(f64, f64)],
    tau_s: f64,
) -> Result<Vec<(f64, f64)>> {
    if raw.len() != index_trace.len()
        || raw
            .iter()
            .zip(index_trace)
            .any(|(a, b)| (a.0 - b.0).abs() > 1e-9 * a.0.abs().max(1.0))
    {
        return Err(Error::GridMismatch {
            left: raw.len(),
            right: index_trace.len(),
        });
    }
    let first = *raw.first().ok_or(Error::InsufficientData {
        points: 0,
        parameters: 2,
    })?;
    let times: Vec<f64> = raw.iter().map(|p| p.0).collect();
    let at_tau = switch_index(&times, tau_s)?;
    let eps0 = index_trace[0].1.powi(2);
    let deviation = index_trace[at_tau].1.powi(2) - eps0;
    if deviation == 0.0 {
        return Err(Error::ZeroIndexDeviation);
    }
    let slope = (raw[at_tau].1 - first.1) / deviation;
    Ok(raw
        .iter()
        .zip(index_trace)
        .map(|(&(t, _), &(_, n_a))| (t, first.1 + slope * (n_a * n_a - eps0)))
        .collect())
}

/// Calibration factor `C(T) = T_L / T` for each sample.
pub fn calibration_factors(raw: &[(f64, f64)], linearized: &[(f64, f64)]) -> Vec<(f64, f64)> {
    raw.iter()
        .zip(linearized)
        .map(|(&(t, y), &(_, yl))| (t, yl / y))
        .collect()
}

/// `k_a = (k_s - k_d) / L0`; under noise the difference can go negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationRate {
    pub k_a: f64,
    pub negative: bool,
}

pub fn close_ka(k_s: f64, k_d: f64, l0: f64) -> Result<AssociationRate> {
    if !(l0 > 0.0) {
        return Err(Error::invalid("l0", "must be positive"));
    }
    let k_a = (k_s - k_d) / l0;
    Ok(AssociationRate {
        k_a,
        negative: k_a < 0.0,
    })
}
