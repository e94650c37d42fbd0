//! Probe states, the intensity-difference measurement and its noise.
//!
//! All closed forms assume a two-mode setup where the signal mode passes the
//! sensor (transmittance `T`) and a loss `eta_a`, and the reference mode a
//! loss `eta_b`. The measured observable is `M = n_a - n_b`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Squeezing gain `G = cosh² r` used for the displaced squeezed state unless
/// configured otherwise.
pub const DEFAULT_TMSD_GAIN: f64 = 4.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StateKind {
    #[serde(rename = "TMC")]
    Tmc,
    #[serde(rename = "TMF")]
    Tmf,
    #[serde(rename = "TMSV")]
    Tmsv,
    #[serde(rename = "TMSD")]
    Tmsd,
}

impl StateKind {
    pub const ALL: [StateKind; 4] = [
        StateKind::Tmc,
        StateKind::Tmf,
        StateKind::Tmsv,
        StateKind::Tmsd,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StateKind::Tmc => "TMC",
            StateKind::Tmf => "TMF",
            StateKind::Tmsv => "TMSV",
            StateKind::Tmsd => "TMSD",
        }
    }
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for StateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StateKind::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("state", format!("unknown state kind `{s}`")))
    }
}

/// Two-mode probe state with its photon-number parameters.
///
/// Every variant puts the same mean photon number `N` in the signal mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ProbeState {
    /// |α⟩|β⟩ with mean photon numbers |α|², |β|².
    #[serde(rename = "TMC")]
    Coherent { alpha_sq: f64, beta_sq: f64 },
    /// |N⟩|N⟩.
    #[serde(rename = "TMF")]
    Fock { n: f64 },
    /// Two-mode squeezed vacuum with `sinh² r = N`.
    #[serde(rename = "TMSV")]
    SqueezedVacuum { n: f64, squeeze_phase: f64 },
    /// Two-mode squeezing applied to |α⟩|0⟩ with `cosh² r = gain` and
    /// `N = G|α|² + (G - 1)`.
    #[serde(rename = "TMSD")]
    SqueezedDisplaced {
        n: f64,
        gain: f64,
        squeeze_phase: f64,
    },
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(
            name,
            format!("{v} must be positive and finite"),
        ))
    }
}

impl ProbeState {
    /// Balanced coherent state, |α|² = |β|² = N.
    pub fn coherent(n: f64) -> Result<Self> {
        Self::coherent_unbalanced(n, n)
    }

    pub fn coherent_unbalanced(alpha_sq: f64, beta_sq: f64) -> Result<Self> {
        positive("alpha_sq", alpha_sq)?;
        if !(beta_sq >= 0.0) || !beta_sq.is_finite() {
            return Err(Error::invalid("beta_sq", "must be non-negative"));
        }
        Ok(ProbeState::Coherent { alpha_sq, beta_sq })
    }

    pub fn fock(n: f64) -> Result<Self> {
        Ok(ProbeState::Fock {
            n: positive("n", n)?,
        })
    }

    pub fn squeezed_vacuum(n: f64) -> Result<Self> {
        Ok(ProbeState::SqueezedVacuum {
            n: positive("n", n)?,
            squeeze_phase: 0.0,
        })
    }

    pub fn squeezed_displaced(n: f64, gain: f64) -> Result<Self> {
        positive("n", n)?;
        if !(gain > 1.0) || !gain.is_finite() {
            return Err(Error::invalid("gain", "G = cosh^2 r must exceed 1"));
        }
        if n < gain - 1.0 {
            return Err(Error::invalid(
                "n",
                format!(
                    "N = {n} is below the squeezing floor G - 1 = {}",
                    gain - 1.0
                ),
            ));
        }
        Ok(ProbeState::SqueezedDisplaced {
            n,
            gain,
            squeeze_phase: 0.0,
        })
    }

    /// Builds the state of `kind` with signal photon number `n`.
    pub fn of_kind(kind: StateKind, n: f64, gain: f64) -> Result<Self> {
        match kind {
            StateKind::Tmc => Self::coherent(n),
            StateKind::Tmf => Self::fock(n),
            StateKind::Tmsv => Self::squeezed_vacuum(n),
            StateKind::Tmsd => Self::squeezed_displaced(n, gain),
        }
    }

    pub fn kind(&self) -> StateKind {
        match self {
            ProbeState::Coherent { .. } => StateKind::Tmc,
            ProbeState::Fock { .. } => StateKind::Tmf,
            ProbeState::SqueezedVacuum { .. } => StateKind::Tmsv,
            ProbeState::SqueezedDisplaced { .. } => StateKind::Tmsd,
        }
    }

    /// Mean input photon number of the signal mode.
    pub fn signal_photons(&self) -> f64 {
        match *self {
            ProbeState::Coherent { alpha_sq, .. } => alpha_sq,
            ProbeState::Fock { n }
            | ProbeState::SqueezedVacuum { n, .. }
            | ProbeState::SqueezedDisplaced { n, .. } => n,
        }
    }

    /// Mean input photon number of the reference mode.
    pub fn reference_photons(&self) -> f64 {
        match *self {
            ProbeState::Coherent { beta_sq, .. } => beta_sq,
            ProbeState::Fock { n } | ProbeState::SqueezedVacuum { n, .. } => n,
            ProbeState::SqueezedDisplaced { n, .. } => n - self.displacement_sq(),
        }
    }

    /// |α|² of the displaced squeezed state (zero for the other states).
    pub fn displacement_sq(&self) -> f64 {
        match *self {
            ProbeState::SqueezedDisplaced { n, gain, .. } => ((n - (gain - 1.0)) / gain).max(0.0),
            _ => 0.0,
        }
    }

    /// Squeezing amplitude r (zero for unsqueezed states).
    pub fn squeezing(&self) -> f64 {
        match *self {
            ProbeState::SqueezedVacuum { n, .. } => n.sqrt().asinh(),
            ProbeState::SqueezedDisplaced { gain, .. } => gain.sqrt().acosh(),
            _ => 0.0,
        }
    }

    pub fn squeeze_phase(&self) -> f64 {
        match *self {
            ProbeState::SqueezedVacuum { squeeze_phase, .. }
            | ProbeState::SqueezedDisplaced { squeeze_phase, .. } => squeeze_phase,
            _ => 0.0,
        }
    }

    /// Same kind of state carrying `n` signal photons.
    pub fn with_signal_photons(&self, n: f64) -> Result<Self> {
        match *self {
            ProbeState::Coherent { alpha_sq, beta_sq } => {
                Self::coherent_unbalanced(n, beta_sq * n / alpha_sq)
            }
            ProbeState::SqueezedDisplaced {
                gain,
                squeeze_phase,
                ..
            } => {
                let mut s = Self::squeezed_displaced(n, gain)?;
                if let ProbeState::SqueezedDisplaced {
                    squeeze_phase: p, ..
                } = &mut s
                {
                    *p = squeeze_phase;
                }
                Ok(s)
            }
            ProbeState::SqueezedVacuum { squeeze_phase, .. } => {
                positive("n", n)?;
                Ok(ProbeState::SqueezedVacuum { n, squeeze_phase })
            }
            ProbeState::Fock { .. } => Self::fock(n),
        }
    }

    /// Coherent reference with the same mean photon number in each mode.
    pub fn matched_coherent(&self) -> ProbeState {
        ProbeState::Coherent {
            alpha_sq: self.signal_photons(),
            beta_sq: self.reference_photons(),
        }
    }
}

/// Configuration-level description of a probe state; the photon number is
/// supplied by the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub kind: StateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
}

impl ProbeSpec {
    pub fn new(kind: StateKind) -> Self {
        ProbeSpec { kind, gain: None }
    }

    pub fn at(&self, n: f64) -> Result<ProbeState> {
        ProbeState::of_kind(self.kind, n, self.gain.unwrap_or(DEFAULT_TMSD_GAIN))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioMode {
    /// Equal loss in both modes.
    Standard,
    /// Reference loss matched to the signal at the sensorgram mid-point.
    Optimized,
    /// Reference mode removed.
    SingleMode,
}

impl ScenarioMode {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioMode::Standard => "standard",
            ScenarioMode::Optimized => "optimized",
            ScenarioMode::SingleMode => "single_mode",
        }
    }
}

/// Loss configuration of the two modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingScenario {
    pub mode: ScenarioMode,
    pub eta_a: f64,
    /// Mid-point transmittance; only the optimized scenario reads it.
    #[serde(default)]
    pub t_mid: f64,
}

impl SensingScenario {
    pub fn new(mode: ScenarioMode, eta_a: f64, t_mid: f64) -> Result<Self> {
        let sc = SensingScenario { mode, eta_a, t_mid };
        sc.validate()?;
        Ok(sc)
    }

    pub fn standard(eta: f64) -> Result<Self> {
        Self::new(ScenarioMode::Standard, eta, 0.0)
    }

    pub fn optimized(eta_a: f64, t_mid: f64) -> Result<Self> {
        Self::new(ScenarioMode::Optimized, eta_a, t_mid)
    }

    pub fn single_mode(eta_a: f64) -> Result<Self> {
        Self::new(ScenarioMode::SingleMode, eta_a, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_a > 0.0 && self.eta_a <= 1.0) {
            return Err(Error::invalid("eta_a", "must lie in (0, 1]"));
        }
        if self.mode == ScenarioMode::Optimized && !(self.t_mid > 0.0 && self.t_mid <= 1.0) {
            return Err(Error::invalid(
                "t_mid",
                "optimized sensing needs t_mid in (0, 1]",
            ));
        }
        Ok(())
    }

    pub fn eta_b(&self) -> f64 {
        match self.mode {
            ScenarioMode::Standard => self.eta_a,
            ScenarioMode::Optimized => self.eta_a * self.t_mid,
            ScenarioMode::SingleMode => 0.0,
        }
    }
}

/// Expectation of the intensity difference.
pub fn mean_m(state: &ProbeState, t: f64, sc: &SensingScenario) -> f64 {
    sc.eta_a * t * state.signal_photons() - sc.eta_b() * state.reference_photons()
}

/// Standard deviation of the intensity difference.
pub fn delta_m(state: &ProbeState, t: f64, sc: &SensingScenario) -> f64 {
    delta_m_with(state, sc.eta_a * t, sc.eta_b())
}

/// ΔM for effective signal transmissivity `x = η_a T` and reference
/// transmissivity `y = η_b`.
pub(crate) fn delta_m_with(state: &ProbeState, x: f64, y: f64) -> f64 {
    let variance = match *state {
        ProbeState::Coherent { alpha_sq, beta_sq } => x * alpha_sq + y * beta_sq,
        ProbeState::Fock { n } => n * (x * (1.0 - x) + y * (1.0 - y)),
        ProbeState::SqueezedVacuum { n, .. } => n * ((x - y).powi(2) * n + y + x * (1.0 - 2.0 * y)),
        ProbeState::SqueezedDisplaced { gain, .. } => {
            tmsd_variance(gain, state.displacement_sq(), x, y)
        }
    };
    variance.max(0.0).sqrt()
}

fn tmsd_variance(g: f64, a2: f64, x: f64, y: f64) -> f64 {
    let h = g - 1.0;
    2.0 * x * x * g * h * a2
        + x * x * h * h
        + x * (g * a2 + h)
        + 2.0 * y * y * h * h * a2
        + y * y * h * h
        + y * (h * a2 + h)
        - 4.0 * x * y * g * h * a2
        - 2.0 * x * y * g * h
}

/// Photon-number moments of the displaced squeezed state after the channels,
/// as derived by Heisenberg-picture evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmsdMoments {
    pub var_a: f64,
    pub var_b: f64,
    pub cross: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

impl TmsdMoments {
    pub fn delta_m(&self) -> f64 {
        (self.var_a + self.var_b - 2.0 * (self.cross - self.mean_a * self.mean_b))
            .max(0.0)
            .sqrt()
    }
}

pub fn tmsd_moments(gain: f64, alpha_sq: f64, t: f64, sc: &SensingScenario) -> TmsdMoments {
    let (g, a2) = (gain, alpha_sq);
    let h = g - 1.0;
    let x = t * sc.eta_a;
    let y = sc.eta_b();
    TmsdMoments {
        var_a: x * x * h * (h + 2.0 * g * a2) + x * (h + g * a2),
        var_b: h * h * y * y * (2.0 * a2 + 1.0) + h * y * (a2 + 1.0),
        cross: x * y * (g * h * (a2 * a2 + 2.0 * a2) + g * h * (a2 + 1.0) + h * h * (a2 + 1.0)),
        mean_a: x * (g * a2 + h),
        mean_b: y * h * (a2 + 1.0),
    }
}

/// Leading-order ΔM of the displaced squeezed state for |α|² ≫ 1.
pub fn tmsd_delta_m_asymptotic(gain: f64, alpha_sq: f64, t: f64, sc: &SensingScenario) -> f64 {
    let g = gain;
    let x = t * sc.eta_a;
    let y = sc.eta_b();
    let inner = x * g + y * (g - 1.0) + 2.0 * (g - 1.0) * (g * (x - y).powi(2) - y * y);
    alpha_sq.sqrt() * inner.max(0.0).sqrt()
}

/// Sensitivity |d⟨M⟩/dT| = η_a N.
pub fn sensitivity(state: &ProbeState, sc: &SensingScenario) -> f64 {
    sc.eta_a * state.signal_photons()
}

/// Precision of the sample-mean transmittance estimate from `nu` shots.
pub fn delta_t(state: &ProbeState, t: f64, sc: &SensingScenario, nu: u64) -> f64 {
    delta_m(state, t, sc) / sensitivity(state, sc) / (nu as f64).sqrt()
}

/// Noise enhancement R_M = ΔM_C / ΔM_Q against the photon-number matched
/// coherent reference.
pub fn enhancement_rm(state: &ProbeState, t: f64, sc: &SensingScenario) -> f64 {
    delta_m(&state.matched_coherent(), t, sc) / delta_m(state, t, sc)
}

/// NRF = 1 / R_M².
pub fn noise_reduction_factor(state: &ProbeState, t: f64, sc: &SensingScenario) -> f64 {
    enhancement_rm(state, t, sc).powi(-2)
}

/// R_M tabulated over transmittance (columns) and photon number (rows).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnhancementMap {
    pub kind: StateKind,
    pub t_values: Vec<f64>,
    pub n_values: Vec<f64>,
    /// `rows[i][j]` is R_M at `n_values[i]`, `t_values[j]`.
    pub rows: Vec<Vec<f64>>,
}

pub fn midpoint_enhancement_map(
    spec: &ProbeSpec,
    sc: &SensingScenario,
    t_values: &[f64],
    n_values: &[f64],
) -> Result<EnhancementMap> {
    if t_values.is_empty() || n_values.is_empty() {
        return Err(Error::invalid(
            "range",
            "enhancement map needs nonempty T and N ranges",
        ));
    }
    let rows = n_values
        .iter()
        .map(|&n| {
            let state = spec.at(n)?;
            Ok(t_values
                .iter()
                .map(|&t| enhancement_rm(&state, t, sc))
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(EnhancementMap {
        kind: spec.kind,
        t_values: t_values.to_vec(),
        n_values: n_values.to_vec(),
        rows,
    })
}
