//! Monte Carlo estimation of kinetic-parameter precision.
//!
//! Each of `p` sets holds `m` noisy sensorgrams. Every time sample is the
//! mean of `nu` shots, drawn directly from its Gaussian limit
//! `Normal(⟨M⟩, ΔM / √ν)`. Each sensorgram is fitted, the `m` fits of a set
//! are averaged into `k̄`, and the spread of `k̄` over the sets is the
//! estimation precision.
//!
//! Random numbers come from ChaCha8 seeded with the plan seed; sensorgram
//! `j` of set `s` uses stream `(s << 32) | j` and consumes one standard
//! normal (`rand_distr::StandardNormal`) per time sample in grid order. The
//! outcome is therefore fixed by the plan alone, whatever the scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{self, FitConfig, FitResult};
use crate::kinetics::TimeGrid;
use crate::parallel::Execution;
use crate::probes::{self, ProbeState, SensingScenario};

/// Share of failed fits above which an ensemble is flagged unreliable.
pub const UNRELIABLE_FAILURE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpace {
    /// Intensity difference `M̄` with `ΔM / √ν` noise.
    #[default]
    Measurement,
    /// Transmittance `T̄` with `ΔT` noise.
    Transmittance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub nu: u64,
    pub m: usize,
    pub p: usize,
    pub seed: u64,
    pub state: ProbeState,
    pub scenario: SensingScenario,
    pub grid: TimeGrid,
    pub tau_s: f64,
    pub l0: f64,
    #[serde(default)]
    pub noise_space: NoiseSpace,
    /// Multiplies every noise draw; 0 gives noise-free sensorgrams.
    #[serde(default = "unit")]
    pub noise_scale: f64,
    #[serde(default)]
    pub fit: FitConfig,
}

fn unit() -> f64 {
    1.0
}

impl SimulationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.nu == 0 || self.m == 0 || self.p == 0 {
            return Err(Error::invalid("plan", "nu, m and p must all be at least 1"));
        }
        if self.m as u64 > u32::MAX as u64 || self.p as u64 > u32::MAX as u64 {
            return Err(Error::invalid("plan", "m and p must fit in 32 bits"));
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(Error::invalid(
                "noise_scale",
                "must be finite and non-negative",
            ));
        }
        if !(self.l0 > 0.0) || !(self.tau_s > 0.0) {
            return Err(Error::invalid("plan", "l0 and tau_s must be positive"));
        }
        self.scenario.validate()?;
        self.grid.validate()?;
        self.fit.validate()
    }

    /// Random stream of sensorgram `index` within set `set`.
    pub fn stream(&self, set: usize, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((set as u64) << 32) | index as u64);
        rng
    }
}

/// Draws one noisy sensorgram from an ideal transmittance sequence.
pub fn synthesize_noisy_sensorgram<R: Rng + ?Sized>(
    ideal_t: &[(f64, f64)],
    plan: &SimulationPlan,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    let root_nu = (plan.nu as f64).sqrt();
    let sensitivity = probes::sensitivity(&plan.state, &plan.scenario);
    ideal_t
        .iter()
        .map(|&(t, tr)| {
            let z: f64 = rng.sample(StandardNormal);
            let sd = probes::delta_m(&plan.state, tr, &plan.scenario) / root_nu * plan.noise_scale;
            let y = match plan.noise_space {
                NoiseSpace::Measurement => probes::mean_m(&plan.state, tr, &plan.scenario) + sd * z,
                NoiseSpace::Transmittance => tr + sd / sensitivity * z,
            };
            (t, y)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameter {
    #[serde(rename = "k_a")]
    Ka,
    #[serde(rename = "k_s")]
    Ks,
    #[serde(rename = "k_d")]
    Kd,
}

impl Parameter {
    pub const ALL: [Parameter; 3] = [Parameter::Ka, Parameter::Ks, Parameter::Kd];

    pub fn label(self) -> &'static str {
        match self {
            Parameter::Ka => "k_a",
            Parameter::Ks => "k_s",
            Parameter::Kd => "k_d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerParameter<T> {
    pub k_a: T,
    pub k_s: T,
    pub k_d: T,
}

impl<T: Copy> PerParameter<T> {
    pub fn get(&self, p: Parameter) -> T {
        match p {
            Parameter::Ka => self.k_a,
            Parameter::Ks => self.k_s,
            Parameter::Kd => self.k_d,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Parameter, T) -> U) -> PerParameter<U> {
        PerParameter {
            k_a: f(Parameter::Ka, self.k_a),
            k_s: f(Parameter::Ks, self.k_s),
            k_d: f(Parameter::Kd, self.k_d),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Parameter, T)> + use<T> {
        let values = *self;
        Parameter::ALL.into_iter().map(move |p| (p, values.get(p)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    /// Mean of the set averages.
    pub estimate: f64,
    /// Sample standard deviation of the set averages (0 for a single set).
    pub precision: f64,
}

/// Averages of the converged fits within one set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetEstimate {
    pub mean: PerParameter<f64>,
    pub converged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEnsembleResult {
    pub plan: SimulationPlan,
    pub summary: PerParameter<ParameterSummary>,
    pub sets: Vec<SetEstimate>,
    pub failed_fits: usize,
    pub total_fits: usize,
    /// Failures above [`UNRELIABLE_FAILURE_FRACTION`] of all fits.
    pub unreliable: bool,
}

impl TrialEnsembleResult {
    pub fn failure_fraction(&self) -> f64 {
        self.failed_fits as f64 / self.total_fits as f64
    }

    pub fn precision(&self) -> PerParameter<f64> {
        self.summary.map(|_, s| s.precision)
    }
}

pub fn run_ensemble(plan: &SimulationPlan, ideal_t: &[(f64, f64)]) -> Result<TrialEnsembleResult> {
    run_ensemble_with(plan, ideal_t, Execution::default())
}

/// Fits one noisy realization.
pub fn simulate_fit(
    plan: &SimulationPlan,
    ideal_t: &[(f64, f64)],
    set: usize,
    index: usize,
) -> Result<FitResult> {
    let noisy = synthesize_noisy_sensorgram(ideal_t, plan, &mut plan.stream(set, index));
    fit::fit_sensorgram(&noisy, plan.tau_s, plan.l0, &plan.fit)
}

pub fn run_ensemble_with(
    plan: &SimulationPlan,
    ideal_t: &[(f64, f64)],
    execution: Execution,
) -> Result<TrialEnsembleResult> {
    plan.validate()?;
    if ideal_t.len() != plan.grid.len() {
        return Err(Error::GridMismatch {
            left: ideal_t.len(),
            right: plan.grid.len(),
        });
    }
    if ideal_t.iter().any(|p| !(0.0..=1.0).contains(&p.1)) {
        return Err(Error::invalid(
            "ideal_t",
            "transmittance must lie in [0, 1]",
        ));
    }

    let m = plan.m;
    let fits = execution.map_indexed(plan.p * m, |i| {
        simulate_fit(plan, ideal_t, i / m, i % m)
            .ok()
            .filter(|f| f.converged)
    });

    let mut sets = Vec::with_capacity(plan.p);
    let mut failed_fits = 0;
    for (set, chunk) in fits.chunks(m).enumerate() {
        let good: Vec<&FitResult> = chunk.iter().flatten().collect();
        failed_fits += m - good.len();
        if good.is_empty() {
            return Err(Error::EmptySet { set, attempted: m });
        }
        let n = good.len() as f64;
        let avg = |f: fn(&FitResult) -> f64| good.iter().map(|r| f(r)).sum::<f64>() / n;
        sets.push(SetEstimate {
            mean: PerParameter {
                k_a: avg(|r| r.k_a),
                k_s: avg(|r| r.k_s),
                k_d: avg(|r| r.k_d),
            },
            converged: good.len(),
        });
    }

    let summary = PerParameter {
        k_a: (),
        k_s: (),
        k_d: (),
    }
    .map(|param, ()| summarize(sets.iter().map(|s| s.mean.get(param))));
    let total_fits = plan.p * m;
    Ok(TrialEnsembleResult {
        plan: *plan,
        summary,
        sets,
        failed_fits,
        total_fits,
        unreliable: failed_fits as f64 > UNRELIABLE_FAILURE_FRACTION * total_fits as f64,
    })
}

fn summarize(values: impl Iterator<Item = f64>) -> ParameterSummary {
    let values: Vec<f64> = values.collect();
    let n = values.len() as f64;
    let estimate = values.iter().sum::<f64>() / n;
    let precision = if values.len() > 1 {
        (values.iter().map(|v| (v - estimate).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    ParameterSummary {
        estimate,
        precision,
    }
}

fn check_common(a: &SimulationPlan, b: &SimulationPlan) -> Result<()> {
    let mut diffs = Vec::new();
    if a.nu != b.nu {
        diffs.push("nu");
    }
    if a.p != b.p {
        diffs.push("p");
    }
    if a.grid != b.grid || a.tau_s != b.tau_s || a.l0 != b.l0 {
        diffs.push("sensorgram");
    }
    if a.scenario != b.scenario {
        diffs.push("scenario");
    }
    if a.state.signal_photons() != b.state.signal_photons() {
        diffs.push("N");
    }
    if a.noise_space != b.noise_space || a.noise_scale != b.noise_scale {
        diffs.push("noise model");
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(Error::PlanMismatch(format!(
            "plans differ in {}",
            diffs.join(", ")
        )))
    }
}

/// R_k = Δk̄_C / Δk̄_Q for each parameter.
pub fn enhancement_rk(
    classical: &TrialEnsembleResult,
    quantum: &TrialEnsembleResult,
) -> Result<PerParameter<f64>> {
    check_common(&classical.plan, &quantum.plan)?;
    if classical.plan.m != quantum.plan.m {
        return Err(Error::PlanMismatch("plans differ in m".into()));
    }
    let q = quantum.precision();
    Ok(classical.precision().map(|p, c| c / q.get(p)))
}

/// Gain in precision from averaging more sensorgrams per set:
/// `Δk̄(m_small) / Δk̄(m_large)`, ideally `√(m_large / m_small)`.
pub fn m_enhancement(
    large_m: &TrialEnsembleResult,
    small_m: &TrialEnsembleResult,
) -> Result<PerParameter<f64>> {
    check_common(&large_m.plan, &small_m.plan)?;
    if large_m.plan.state != small_m.plan.state {
        return Err(Error::PlanMismatch("plans differ in probe state".into()));
    }
    let large = large_m.precision();
    Ok(small_m.precision().map(|p, s| s / large.get(p)))
}
