//! Sweep execution and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use spr_kinetics::cases::{CaseStudy, IdealSensorgram};
use spr_kinetics::fit::FitConfig;
use spr_kinetics::probes::{self, ProbeSpec, ProbeState, SensingScenario};
use spr_kinetics::simulate::{self, NoiseSpace, PerParameter, SimulationPlan, TrialEnsembleResult};
use spr_kinetics::Execution;

use crate::config::{ExperimentConfig, MapGrid, DEFAULT_SETS, PAPER_FIDELITY_SETS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub paper_fidelity: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub rows: usize,
    /// One line per ensemble flagged for too many failed fits.
    pub unreliable: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ResultRow<'a> {
    case: &'a str,
    state: &'a str,
    scenario: &'a str,
    #[serde(rename = "N")]
    n: f64,
    nu: u64,
    m: usize,
    parameter: &'a str,
    estimate: f64,
    precision: f64,
    #[serde(rename = "R_k")]
    r_k: f64,
    #[serde(rename = "R_M_midpoint")]
    r_m_midpoint: f64,
    failed_fits: usize,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct EnsembleTiming {
    state: String,
    n: f64,
    nu: u64,
    m: usize,
    seconds: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    case: &'a CaseStudy,
    t_mid: f64,
    scenario: SensingScenario,
    outputs: Vec<String>,
    unreliable: Vec<String>,
    total_seconds: f64,
    ensembles: Vec<EnsembleTiming>,
}

/// Fills in sets, seed and output directory so the manifest alone
/// reproduces the run.
pub fn resolve_config(config: &ExperimentConfig, opts: &RunOptions) -> ExperimentConfig {
    let mut resolved = config.clone();
    if let Some(seed) = opts.seed {
        resolved.seed = seed;
    }
    if opts.paper_fidelity {
        resolved.p = Some(PAPER_FIDELITY_SETS);
    } else if resolved.p.is_none() {
        resolved.p = Some(DEFAULT_SETS);
    }
    if let Some(dir) = &opts.out_dir {
        resolved.output_dir = Some(dir.clone());
    } else if resolved.output_dir.is_none() {
        resolved.output_dir = Some(PathBuf::from("out"));
    }
    if resolved.map.is_none() {
        resolved.map = Some(MapGrid::default());
    }
    resolved
}

fn plan(
    case: &CaseStudy,
    state: ProbeState,
    scenario: SensingScenario,
    nu: u64,
    m: usize,
    p: usize,
    seed: u64,
) -> SimulationPlan {
    SimulationPlan {
        nu,
        m,
        p,
        seed,
        state,
        scenario,
        grid: case.grid,
        tau_s: case.kinetics.tau_s,
        l0: case.kinetics.l0,
        noise_space: NoiseSpace::Measurement,
        noise_scale: 1.0,
        fit: FitConfig::default(),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))
}

pub fn write_ideal_sensorgram(
    path: &Path,
    ideal: &IdealSensorgram,
    states: &[ProbeState],
    scenario: &SensingScenario,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec![
        "t".to_owned(),
        "theta_deg".into(),
        "n_a".into(),
        "T".into(),
        "T_L".into(),
    ];
    header.extend(states.iter().map(|s| format!("M_mean_{}", s.kind())));
    w.write_record(&header)?;
    for ((p, &(_, t_l)), &(_, signal)) in ideal
        .points
        .iter()
        .zip(&ideal.linearized)
        .zip(&ideal.signal)
    {
        let mut record = vec![
            p.t.to_string(),
            p.theta_deg.to_string(),
            p.n_a.to_string(),
            p.transmittance.to_string(),
            t_l.to_string(),
        ];
        record.extend(
            states
                .iter()
                .map(|s| probes::mean_m(s, signal, scenario).to_string()),
        );
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn write_map(
    path: &Path,
    state: &ProbeState,
    grid: &MapGrid,
    scenario: &SensingScenario,
) -> Result<()> {
    let spec = ProbeSpec {
        kind: state.kind(),
        gain: match state {
            ProbeState::SqueezedDisplaced { gain, .. } => Some(*gain),
            _ => None,
        },
    };
    let map = probes::midpoint_enhancement_map(&spec, scenario, &grid.t, &grid.n)?;
    let mut w = csv_writer(path)?;
    w.write_record(["N", "T", "R_M"])?;
    for (n, row) in map.n_values.iter().zip(&map.rows) {
        for (t, r) in map.t_values.iter().zip(row) {
            w.write_record([n.to_string(), t.to_string(), r.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs every sweep point and writes the five artifacts.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    let started = Instant::now();
    config.validate()?;
    let config = resolve_config(config, opts);
    let case = config.resolve_case()?;
    let ideal = case.ideal()?;
    let scenario = config.scenario(ideal.t_mid)?;
    let p = config.p.expect("resolved");
    let seed = config.seed;
    let out = config.output_dir.clone().expect("resolved");
    let map_grid = config.map.clone().expect("resolved");
    let nus = config
        .sweeps
        .nu
        .clone()
        .unwrap_or_else(|| vec![case.default_nu]);
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;

    let n0 = config.sweeps.n[0];
    let display_states = config
        .states
        .iter()
        .map(|s| s.at(n0))
        .collect::<spr_kinetics::Result<Vec<_>>>()?;
    write_ideal_sensorgram(
        &out.join("sensorgram_ideal.csv"),
        &ideal,
        &display_states,
        &scenario,
    )?;

    let mut sample = csv_writer(&out.join("sensorgram_sample.csv"))?;
    sample.write_record(["state", "t", "T", "M_mean", "M_sample"])?;
    for state in &display_states {
        let pl = plan(&case, *state, scenario, nus[0], config.sweeps.m[0], p, seed);
        let noisy = simulate::synthesize_noisy_sensorgram(&ideal.signal, &pl, &mut pl.stream(0, 0));
        for (&(t, tr), &(_, y)) in ideal.signal.iter().zip(&noisy) {
            sample.write_record([
                state.kind().to_string(),
                t.to_string(),
                tr.to_string(),
                probes::mean_m(state, tr, &scenario).to_string(),
                y.to_string(),
            ])?;
        }
    }
    sample.flush()?;

    let mut outputs = vec![
        "sensorgram_ideal.csv".to_owned(),
        "sensorgram_sample.csv".to_owned(),
    ];
    for state in &display_states {
        let name = format!("midpoint_map_{}.csv", state.kind().label().to_lowercase());
        write_map(&out.join(&name), state, &map_grid, &scenario)?;
        outputs.push(name);
    }

    let mut results = csv_writer(&out.join("results.csv"))?;
    let mut rows = 0;
    let mut unreliable = Vec::new();
    let mut timings = Vec::new();
    let mut references: Vec<(ProbeState, u64, usize, TrialEnsembleResult)> = Vec::new();
    let ensemble = |state: ProbeState,
                    nu: u64,
                    m: usize,
                    timings: &mut Vec<EnsembleTiming>|
     -> Result<TrialEnsembleResult> {
        let clock = Instant::now();
        let pl = plan(&case, state, scenario, nu, m, p, seed);
        let res = simulate::run_ensemble_with(&pl, &ideal.signal, Execution::Parallel)
            .with_context(|| {
                format!(
                    "ensemble {} N={} nu={nu} m={m}",
                    state.kind(),
                    state.signal_photons()
                )
            })?;
        timings.push(EnsembleTiming {
            state: state.kind().to_string(),
            n: state.signal_photons(),
            nu,
            m,
            seconds: clock.elapsed().as_secs_f64(),
        });
        Ok(res)
    };

    for spec in &config.states {
        for &n in &config.sweeps.n {
            let state = spec.at(n)?;
            let reference_state = state.matched_coherent();
            let r_m = probes::enhancement_rm(&state, ideal.t_mid, &scenario);
            for &nu in &nus {
                for &m in &config.sweeps.m {
                    eprintln!("ensemble {} N={n} nu={nu} m={m} p={p}", state.kind());
                    let quantum = ensemble(state, nu, m, &mut timings)?;
                    let cached = references
                        .iter()
                        .position(|(s, v, k, _)| *s == reference_state && *v == nu && *k == m);
                    let index = match cached {
                        Some(i) => i,
                        None if reference_state == state => {
                            references.push((state, nu, m, quantum.clone()));
                            references.len() - 1
                        }
                        None => {
                            let classical = ensemble(reference_state, nu, m, &mut timings)?;
                            references.push((reference_state, nu, m, classical));
                            references.len() - 1
                        }
                    };
                    let r_k: PerParameter<f64> =
                        simulate::enhancement_rk(&references[index].3, &quantum)?;
                    for check in [&quantum, &references[index].3] {
                        if check.unreliable {
                            let line = format!(
                                "{} N={n} nu={nu} m={m}: {:.1}% of fits failed",
                                check.plan.state.kind(),
                                100.0 * check.failure_fraction()
                            );
                            if !unreliable.contains(&line) {
                                unreliable.push(line);
                            }
                        }
                    }
                    for (param, summary) in quantum.summary.iter() {
                        results.serialize(ResultRow {
                            case: &case.name,
                            state: state.kind().label(),
                            scenario: scenario.mode.label(),
                            n,
                            nu,
                            m,
                            parameter: param.label(),
                            estimate: summary.estimate,
                            precision: summary.precision,
                            r_k: r_k.get(param),
                            r_m_midpoint: r_m,
                            failed_fits: quantum.failed_fits,
                            seed,
                        })?;
                        rows += 1;
                    }
                }
            }
        }
    }
    results.flush()?;
    outputs.push("results.csv".into());
    outputs.push("manifest.json".into());

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: &config,
        case: &case,
        t_mid: ideal.t_mid,
        scenario,
        outputs,
        unreliable: unreliable.clone(),
        total_seconds: started.elapsed().as_secs_f64(),
        ensembles: timings,
    };
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;

    Ok(RunSummary {
        output_dir: out,
        rows,
        unreliable,
    })
}
