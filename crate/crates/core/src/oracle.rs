//! Brute-force photon statistics in a truncated two-mode Fock basis.
//!
//! States are built explicitly (the displaced squeezed state by applying the
//! two-mode squeezing generator to |α⟩|0⟩), losses are applied as exact
//! binomial thinning, and the moments of `M = n_a - n_b` are summed directly.
//! Nothing here reuses the Heisenberg-picture moment formulas in
//! [`crate::probes`], so the two routes check each other.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::probes::{self, ProbeState, StateKind};
use crate::Execution;

/// Default bound on discarded probability.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;

/// Pure two-mode state on `{0..=cutoff}²`, amplitudes row-major in `(n_a, n_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedTwoModeState {
    pub cutoff: usize,
    pub amplitudes: Vec<Complex64>,
    pub tail_mass: f64,
}

impl TruncatedTwoModeState {
    fn dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn amplitude(&self, n_a: usize, n_b: usize) -> Complex64 {
        self.amplitudes[n_a * self.dim() + n_b]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Joint photon-number distribution, row-major in `(n_a, n_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPhotonDistribution {
    pub cutoff: usize,
    pub probabilities: Vec<f64>,
    pub tail_mass: f64,
}

impl JointPhotonDistribution {
    pub fn probability(&self, n_a: usize, n_b: usize) -> f64 {
        self.probabilities[n_a * (self.cutoff + 1) + n_b]
    }

    pub fn marginal_a(&self) -> Vec<f64> {
        self.probabilities
            .chunks(self.cutoff + 1)
            .map(|row| row.iter().sum())
            .collect()
    }
}

/// Moments of the intensity difference computed by direct summation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleMoments {
    pub mean_a: f64,
    pub mean_b: f64,
    pub var_a: f64,
    pub var_b: f64,
    pub covariance: f64,
    pub mean_m: f64,
    pub delta_m: f64,
}

pub fn build_state(state: &ProbeState, cutoff: usize) -> Result<TruncatedTwoModeState> {
    build_state_with_tolerance(state, cutoff, DEFAULT_TAIL_TOLERANCE)
}

pub fn build_state_with_tolerance(
    state: &ProbeState,
    cutoff: usize,
    tolerance: f64,
) -> Result<TruncatedTwoModeState> {
    let built = match *state {
        ProbeState::Coherent { alpha_sq, beta_sq } => coherent_pair(alpha_sq, beta_sq, cutoff),
        ProbeState::Fock { n } => fock_pair(n, cutoff)?,
        ProbeState::SqueezedVacuum { squeeze_phase, .. } => {
            squeezed_vacuum(state.squeezing(), squeeze_phase, cutoff)
        }
        ProbeState::SqueezedDisplaced { squeeze_phase, .. } => squeezed_displaced(
            state.displacement_sq().sqrt(),
            state.squeezing(),
            squeeze_phase,
            cutoff,
        )?,
    };
    if built.tail_mass > tolerance {
        return Err(Error::TruncationTail {
            tail_mass: built.tail_mass,
            tolerance,
        });
    }
    Ok(built)
}

/// Coherent amplitudes e^{-|α|²/2} αⁿ/√n! for a real displacement.
fn coherent_amplitudes(alpha: f64, cutoff: usize) -> Vec<f64> {
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut c = (-0.5 * alpha * alpha).exp();
    amps.push(c);
    for n in 1..=cutoff {
        c *= alpha / (n as f64).sqrt();
        amps.push(c);
    }
    amps
}

fn coherent_pair(alpha_sq: f64, beta_sq: f64, cutoff: usize) -> TruncatedTwoModeState {
    let a = coherent_amplitudes(alpha_sq.sqrt(), cutoff);
    let b = coherent_amplitudes(beta_sq.sqrt(), cutoff);
    let amplitudes: Vec<Complex64> = a
        .iter()
        .flat_map(|&x| b.iter().map(move |&y| Complex64::from(x * y)))
        .collect();
    let kept_a: f64 = a.iter().map(|x| x * x).sum();
    let kept_b: f64 = b.iter().map(|x| x * x).sum();
    TruncatedTwoModeState {
        cutoff,
        amplitudes,
        tail_mass: (1.0 - kept_a * kept_b).max(0.0),
    }
}

fn fock_pair(n: f64, cutoff: usize) -> Result<TruncatedTwoModeState> {
    if n.fract() != 0.0 || n < 0.0 {
        return Err(Error::invalid(
            "n",
            format!("Fock state needs an integer photon number, got {n}"),
        ));
    }
    let n = n as usize;
    let dim = cutoff + 1;
    let mut amplitudes = vec![Complex64::default(); dim * dim];
    let tail_mass = if n <= cutoff {
        amplitudes[n * dim + n] = Complex64::from(1.0);
        0.0
    } else {
        1.0
    };
    Ok(TruncatedTwoModeState {
        cutoff,
        amplitudes,
        tail_mass,
    })
}

/// Schmidt form sech r · (-e^{iθ} tanh r)ⁿ on the diagonal.
fn squeezed_vacuum(r: f64, phase: f64, cutoff: usize) -> TruncatedTwoModeState {
    let dim = cutoff + 1;
    let lambda = r.tanh();
    let ratio = -Complex64::from_polar(lambda, phase);
    let mut amplitudes = vec![Complex64::default(); dim * dim];
    let mut c = Complex64::from(1.0 / r.cosh());
    for n in 0..dim {
        amplitudes[n * dim + n] = c;
        c *= ratio;
    }
    TruncatedTwoModeState {
        cutoff,
        amplitudes,
        tail_mass: lambda.powi(2 * dim as i32),
    }
}

/// Applies `K = χ* a b - χ a† b†` to `psi` on `{0..=cutoff}²`.
fn apply_generator(chi: Complex64, psi: &[Complex64], out: &mut [Complex64], cutoff: usize) {
    let dim = cutoff + 1;
    out.iter_mut().for_each(|x| *x = Complex64::default());
    for na in 0..dim {
        for nb in 0..dim {
            let amp = psi[na * dim + nb];
            if amp == Complex64::default() {
                continue;
            }
            // a b |na, nb> = sqrt(na nb) |na-1, nb-1>
            if na > 0 && nb > 0 {
                let f = ((na * nb) as f64).sqrt();
                out[(na - 1) * dim + nb - 1] += chi.conj() * amp * f;
            }
            // a† b† |na, nb> = sqrt((na+1)(nb+1)) |na+1, nb+1>
            if na < cutoff && nb < cutoff {
                let f = (((na + 1) * (nb + 1)) as f64).sqrt();
                out[(na + 1) * dim + nb + 1] -= chi * amp * f;
            }
        }
    }
}

/// exp(K)|ψ⟩ on the truncated space: the evolution is split into short
/// slices, each expanded as a Taylor series until the terms vanish.
fn evolve_squeezing(chi: Complex64, psi0: Vec<Complex64>, cutoff: usize) -> Vec<Complex64> {
    let slices = (chi.norm() * (cutoff + 1) as f64 / 2.0).ceil().max(1.0) as usize;
    let h = chi / slices as f64;
    let mut psi = psi0;
    let mut term = vec![Complex64::default(); psi.len()];
    let mut next = vec![Complex64::default(); psi.len()];
    for _ in 0..slices {
        term.copy_from_slice(&psi);
        let mut acc = psi.clone();
        for k in 1..200 {
            apply_generator(h, &term, &mut next, cutoff);
            let inv = 1.0 / k as f64;
            let mut size = 0.0;
            for (t, n) in term.iter_mut().zip(&next) {
                *t = n * inv;
                size += t.norm_sqr();
            }
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            if size < 1e-34 {
                break;
            }
        }
        psi = acc;
    }
    psi
}

fn squeezed_displaced(
    alpha: f64,
    r: f64,
    phase: f64,
    cutoff: usize,
) -> Result<TruncatedTwoModeState> {
    let chi = Complex64::from_polar(r, phase);
    let run = |working: usize| {
        let dim = working + 1;
        let a = coherent_amplitudes(alpha, working);
        let mut psi0 = vec![Complex64::default(); dim * dim];
        for (na, &amp) in a.iter().enumerate() {
            psi0[na * dim] = Complex64::from(amp);
        }
        let psi = evolve_squeezing(chi, psi0, working);
        restrict(&psi, working, cutoff)
    };
    // Generous working space, compared against a second, larger one.
    let margin = (cutoff / 2).max(16);
    let first = run(cutoff + margin);
    let second = run(cutoff + 2 * margin);
    let change = first
        .iter()
        .zip(&second)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if change > 1e-9 {
        return Err(Error::TruncationConvergence { change });
    }
    let kept: f64 = second.iter().map(|a| a.norm_sqr()).sum();
    Ok(TruncatedTwoModeState {
        cutoff,
        amplitudes: second,
        tail_mass: (1.0 - kept).max(0.0),
    })
}

fn restrict(psi: &[Complex64], working: usize, cutoff: usize) -> Vec<Complex64> {
    let wd = working + 1;
    (0..=cutoff)
        .flat_map(|na| (0..=cutoff).map(move |nb| psi[na * wd + nb]))
        .collect()
}

/// `thinning[k][n]` = probability that k of n photons survive.
fn binomial_thinning(transmissivity: f64, cutoff: usize) -> Vec<Vec<f64>> {
    let dim = cutoff + 1;
    let mut matrix = vec![vec![0.0; dim]; dim];
    let mut row = vec![0.0; dim];
    row[0] = 1.0;
    for n in 0..dim {
        if n > 0 {
            for k in (0..=n).rev() {
                let stay = if k > 0 {
                    row[k - 1] * transmissivity
                } else {
                    0.0
                };
                row[k] = row[k] * (1.0 - transmissivity) + stay;
            }
        }
        for (out, &p) in matrix.iter_mut().zip(&row).take(n + 1) {
            out[n] = p;
        }
    }
    matrix
}

/// Sends mode a through the sensor and its loss (transmissivity η_a T) and
/// mode b through its loss η_b.
pub fn apply_channels(
    state: &TruncatedTwoModeState,
    t: f64,
    eta_a: f64,
    eta_b: f64,
) -> JointPhotonDistribution {
    let dim = state.dim();
    let input: Vec<f64> = state.amplitudes.iter().map(|a| a.norm_sqr()).collect();
    let ba = binomial_thinning(eta_a * t, state.cutoff);
    let bb = binomial_thinning(eta_b, state.cutoff);
    // P' = B_a P B_bᵀ
    let mut half = vec![0.0; dim * dim];
    for na in 0..dim {
        for kb in 0..dim {
            half[na * dim + kb] = (kb..dim).map(|nb| input[na * dim + nb] * bb[kb][nb]).sum();
        }
    }
    let mut out = vec![0.0; dim * dim];
    for ka in 0..dim {
        for kb in 0..dim {
            out[ka * dim + kb] = (ka..dim).map(|na| ba[ka][na] * half[na * dim + kb]).sum();
        }
    }
    JointPhotonDistribution {
        cutoff: state.cutoff,
        probabilities: out,
        tail_mass: state.tail_mass,
    }
}

pub fn oracle_moments(dist: &JointPhotonDistribution) -> OracleMoments {
    let dim = dist.cutoff + 1;
    let (mut ea, mut eb, mut eaa, mut ebb, mut eab) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for na in 0..dim {
        for nb in 0..dim {
            let p = dist.probabilities[na * dim + nb];
            let (x, y) = (na as f64, nb as f64);
            ea += p * x;
            eb += p * y;
            eaa += p * x * x;
            ebb += p * y * y;
            eab += p * x * y;
        }
    }
    let var_a = eaa - ea * ea;
    let var_b = ebb - eb * eb;
    let covariance = eab - ea * eb;
    OracleMoments {
        mean_a: ea,
        mean_b: eb,
        var_a,
        var_b,
        covariance,
        mean_m: ea - eb,
        delta_m: (var_a + var_b - 2.0 * covariance).max(0.0).sqrt(),
    }
}

/// Worst disagreement between oracle and closed forms for one state kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KindDeviation {
    pub kind: StateKind,
    pub max_rel_delta_m: f64,
    pub max_rel_mean_m: f64,
    pub max_tail_mass: f64,
    pub tuples: usize,
}

impl KindDeviation {
    pub fn worst(&self) -> f64 {
        self.max_rel_delta_m.max(self.max_rel_mean_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub cutoff: usize,
    pub tolerance: f64,
    pub kinds: Vec<KindDeviation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.kinds.iter().all(|k| k.worst() <= self.tolerance)
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

/// Random small-parameter probe state of the given kind.
fn sample_state(kind: StateKind, rng: &mut ChaCha8Rng) -> ProbeState {
    match kind {
        StateKind::Tmc => {
            ProbeState::coherent_unbalanced(rng.random_range(0.1..4.0), rng.random_range(0.1..4.0))
                .expect("positive photon numbers")
        }
        StateKind::Tmf => ProbeState::fock(rng.random_range(1..=4) as f64).expect("positive"),
        StateKind::Tmsv => {
            let r: f64 = rng.random_range(0.05..0.5);
            ProbeState::squeezed_vacuum(r.sinh().powi(2)).expect("positive")
        }
        StateKind::Tmsd => {
            let r: f64 = rng.random_range(0.05..0.5);
            let gain = r.cosh().powi(2);
            let alpha_sq: f64 = rng.random_range(0.0..4.0);
            ProbeState::squeezed_displaced(gain * alpha_sq + gain - 1.0, gain).expect("valid")
        }
    }
}

/// Compares oracle and closed-form ⟨M⟩, ΔM for `tuples` random
/// `(state, T, η_a, η_b)` draws per state kind.
pub fn verify_closed_forms(
    cutoff: usize,
    tuples: usize,
    seed: u64,
    tolerance: f64,
    execution: Execution,
) -> Result<VerificationReport> {
    if tuples == 0 {
        return Err(Error::invalid("tuples", "must be at least 1"));
    }
    let mut kinds = Vec::new();
    for (k_index, kind) in StateKind::ALL.into_iter().enumerate() {
        let rows = execution.map_indexed(tuples, |i| -> Result<(f64, f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((k_index as u64) << 32) | i as u64);
            let state = sample_state(kind, &mut rng);
            let t: f64 = rng.random_range(0.0..=1.0);
            let eta_a: f64 = rng.random_range(0.05..=1.0);
            let eta_b: f64 = rng.random_range(0.0..=1.0);
            let built = build_state(&state, cutoff)?;
            let moments = oracle_moments(&apply_channels(&built, t, eta_a, eta_b));
            let x = eta_a * t;
            let closed_delta = probes::delta_m_with(&state, x, eta_b);
            let closed_mean = x * state.signal_photons() - eta_b * state.reference_photons();
            Ok((
                relative(moments.delta_m, closed_delta),
                relative(moments.mean_m, closed_mean),
                built.tail_mass,
            ))
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        kinds.push(KindDeviation {
            kind,
            max_rel_delta_m: rows.iter().map(|r| r.0).fold(0.0, f64::max),
            max_rel_mean_m: rows.iter().map(|r| r.1).fold(0.0, f64::max),
            max_tail_mass: rows.iter().map(|r| r.2).fold(0.0, f64::max),
            tuples,
        });
    }
    Ok(VerificationReport {
        cutoff,
        tolerance,
        kinds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probes::SensingScenario;
    use approx::assert_relative_eq;

    #[test]
    fn fock_pair_is_single_basis_vector() {
        let s = build_state(&ProbeState::fock(2.0).unwrap(), 4).unwrap();
        for na in 0..=4 {
            for nb in 0..=4 {
                let expected = if (na, nb) == (2, 2) { 1.0 } else { 0.0 };
                assert_eq!(s.amplitude(na, nb).re, expected);
            }
        }
        assert!(build_state(&ProbeState::fock(2.5).unwrap(), 4).is_err());
        assert!(matches!(
            build_state(&ProbeState::fock(6.0).unwrap(), 4),
            Err(Error::TruncationTail { .. })
        ));
    }

    #[test]
    fn squeezed_vacuum_schmidt_coefficients() {
        let r: f64 = 0.5;
        let s = build_state(&ProbeState::squeezed_vacuum(r.sinh().powi(2)).unwrap(), 60).unwrap();
        let lambda2 = r.tanh().powi(2);
        for n in 0..10 {
            assert_relative_eq!(
                s.amplitude(n, n).norm_sqr(),
                (1.0 - lambda2) * lambda2.powi(n as i32),
                max_relative = 1e-12
            );
        }
        // 1 - tanh²(0.5) = sech²(0.5)
        assert!((s.amplitude(0, 0).norm_sqr() - 0.78645).abs() < 1e-5);
        assert_eq!(s.amplitude(1, 0), Complex64::default());
    }

    #[test]
    fn generator_route_matches_schmidt_form() {
        let r: f64 = 0.5;
        let gain = r.cosh().powi(2);
        let tmsd = ProbeState::squeezed_displaced(gain - 1.0, gain).unwrap();
        let tmsv = ProbeState::squeezed_vacuum(gain - 1.0).unwrap();
        let a = build_state(&tmsd, 40).unwrap();
        let b = build_state(&tmsv, 40).unwrap();
        for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn identity_channel_keeps_distribution() {
        let s = build_state(&ProbeState::coherent_unbalanced(2.0, 1.0).unwrap(), 30).unwrap();
        let d = apply_channels(&s, 1.0, 1.0, 1.0);
        for (p, a) in d.probabilities.iter().zip(&s.amplitudes) {
            assert_relative_eq!(*p, a.norm_sqr(), epsilon = 1e-15);
        }
    }

    #[test]
    fn single_photon_splits_evenly() {
        let s = build_state(&ProbeState::fock(1.0).unwrap(), 3).unwrap();
        let d = apply_channels(&s, 0.5, 1.0, 1.0);
        assert_relative_eq!(d.probability(0, 1), 0.5, epsilon = 1e-15);
        assert_relative_eq!(d.probability(1, 1), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn coherent_thinning_stays_poisson() {
        let s = build_state(&ProbeState::coherent(3.0).unwrap(), 60).unwrap();
        let d = apply_channels(&s, 0.4, 1.0, 1.0);
        assert_relative_eq!(d.marginal_a()[0], (-1.2f64).exp(), max_relative = 1e-12);
        let total: f64 = d.probabilities.iter().sum();
        assert!((total + d.tail_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_matches_fock_closed_form() {
        let state = ProbeState::fock(4.0).unwrap();
        let m = oracle_moments(&apply_channels(
            &build_state(&state, 8).unwrap(),
            0.3,
            1.0,
            1.0,
        ));
        assert_relative_eq!(m.delta_m, (4.0f64 * 0.3 * 0.7).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn oracle_matches_squeezed_vacuum_closed_form() {
        let r: f64 = 0.4;
        let n = r.sinh().powi(2);
        let state = ProbeState::squeezed_vacuum(n).unwrap();
        let m = oracle_moments(&apply_channels(
            &build_state(&state, 60).unwrap(),
            0.6,
            0.8,
            0.8,
        ));
        let sc = SensingScenario::standard(0.8).unwrap();
        assert_relative_eq!(
            m.delta_m,
            probes::delta_m(&state, 0.6, &sc),
            max_relative = 1e-8
        );
        assert_relative_eq!(m.mean_m, probes::mean_m(&state, 0.6, &sc), epsilon = 1e-12);
    }

    #[test]
    fn oracle_matches_displaced_squeezed_closed_form() {
        let gain = 1.5;
        let state = ProbeState::squeezed_displaced(gain * 2.0 + gain - 1.0, gain).unwrap();
        let m = oracle_moments(&apply_channels(
            &build_state(&state, 60).unwrap(),
            0.5,
            1.0,
            1.0,
        ));
        let sc = SensingScenario::standard(1.0).unwrap();
        assert_relative_eq!(
            m.delta_m,
            probes::delta_m(&state, 0.5, &sc),
            max_relative = 1e-6
        );
        assert_relative_eq!(
            m.mean_m,
            probes::mean_m(&state, 0.5, &sc),
            max_relative = 1e-6
        );
    }

    #[test]
    fn cutoff_doubling_converges() {
        let gain = 1.25;
        let state = ProbeState::squeezed_displaced(gain * 3.0 + gain - 1.0, gain).unwrap();
        let at = |c| {
            oracle_moments(&apply_channels(
                &build_state(&state, c).unwrap(),
                0.7,
                0.9,
                0.6,
            ))
            .delta_m
        };
        assert!((at(40) - at(80)).abs() < 1e-8);
    }

    #[test]
    fn under_truncation_is_reported() {
        let state = ProbeState::coherent(4.0).unwrap();
        assert!(matches!(
            build_state(&state, 6),
            Err(Error::TruncationTail { .. })
        ));
        let report = verify_closed_forms(5, 3, 1, 1e-6, Execution::Sequential);
        assert!(matches!(report, Err(Error::TruncationTail { .. })));
        assert!(verify_closed_forms(40, 0, 1, 1e-6, Execution::Sequential).is_err());
    }
}
