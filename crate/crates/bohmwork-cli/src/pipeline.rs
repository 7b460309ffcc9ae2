//! Orchestration of the run and compare pipelines on top of the library.

use std::path::Path;

use serde_json::json;

use bohmwork_core::analytic::{
    coherent_wavefunction, eigen_wavefunction, exp_work_coherent_high_t, exp_work_eigenmixture,
    exp_work_eigenmixture_high_t, exp_work_eigenmixture_quadrature,
};
use bohmwork_core::fields::DerivativeScheme;
use bohmwork_core::fock::trace_energy_change;
use bohmwork_core::mixture::{
    coherent_exp_work_profile, mixture_work_distribution, Binning, Engine, MixtureRun, MixtureSpec,
    RunDiagnostics,
};
use bohmwork_core::propagator::{propagate, PropagationPlan};
use bohmwork_core::tmp::tmp_distribution;
use bohmwork_core::trajectories::{
    integrate_trajectory, sample_initial_positions, AnalyticFlow, FlowField, SnapshotFlow,
};
use bohmwork_core::{BohmError, Result};
use num_complex::Complex64;

use crate::config::{EngineChoice, MixtureSection, ScenarioConfig};
use crate::report;

pub struct EngineOutcome {
    pub label: &'static str,
    pub run: MixtureRun,
}

fn binning(config: &ScenarioConfig) -> Binning {
    match config.histogram_bins {
        Some(n) => Binning::Fixed(n),
        None => Binning::FreedmanDiaconis,
    }
}

/// Execute the configured pipeline and write all result files into `out`.
pub fn run(config: &ScenarioConfig, out: &Path, dump: &DumpFlags) -> Result<()> {
    config.validate()?;
    std::fs::create_dir_all(out)?;

    let spec = config.mixture_spec()?;
    let alloc = config.allocation();
    let seed = config.trajectories.seed;
    let bins = binning(config);

    let mut outcomes = Vec::new();
    if matches!(config.engine, EngineChoice::Analytic | EngineChoice::Both) {
        let run = mixture_work_distribution(&spec, &Engine::Analytic, alloc, seed, bins)?;
        outcomes.push(EngineOutcome { label: "analytic", run });
    }
    if matches!(config.engine, EngineChoice::Numeric | EngineChoice::Both) {
        let engine = config.numeric_engine()?;
        let run = mixture_work_distribution(&spec, &engine, alloc, seed, bins)?;
        outcomes.push(EngineOutcome { label: "numeric", run });
    }

    let tmp = if config.include_tmp() {
        match config.exp_work_beta() {
            Some(beta) => Some(tmp_distribution(&config.oscillator_params()?, beta, None)?),
            None => None,
        }
    } else {
        None
    };

    if dump.snapshots {
        dump_snapshots(config, out)?;
    }
    if dump.trajectories {
        dump_trajectories(config, &spec, out)?;
    }

    report::write_run_reports(config, &outcomes, tmp.as_ref(), out)?;
    Ok(())
}

#[derive(Default)]
pub struct DumpFlags {
    pub snapshots: bool,
    pub trajectories: bool,
}

/// Propagate the representative initial state (first stratum) and dump the
/// snapshot series in the binary format.
fn dump_snapshots(config: &ScenarioConfig, out: &Path) -> Result<()> {
    if config.engine == EngineChoice::Analytic {
        return Err(BohmError::InvalidParameter(
            "--dump-snapshots needs the numeric engine".into(),
        ));
    }
    let params = config.oscillator_params()?;
    let grid = config.grid()?;
    let psi0 = match &config.mixture {
        MixtureSection::PureCoherent { eta_re, eta_im } => {
            coherent_wavefunction(&params, Complex64::new(*eta_re, *eta_im), 0.0, grid)?
        }
        MixtureSection::TwoLevelWell { .. } => {
            return Err(BohmError::InvalidParameter(
                "snapshot dump is not available for the box scenario".into(),
            ));
        }
        _ => eigen_wavefunction(&params, first_level(&config.mixture), 0.0, grid)?,
    };
    let plan = PropagationPlan::new(
        params.hamiltonian(),
        0.0,
        params.tau,
        config.propagation.n_steps,
        config.propagation.snapshot_stride,
    )?;
    let series = propagate(&psi0, &plan)?;
    let file = std::fs::File::create(out.join("snapshots.bin"))?;
    series.write_dump(std::io::BufWriter::new(file))?;
    Ok(())
}

fn first_level(mixture: &MixtureSection) -> usize {
    match mixture {
        MixtureSection::PureEigenstate { n } => *n,
        _ => 0,
    }
}

/// Integrate a small inspection ensemble through the configured flow and
/// write it as CSV.
fn dump_trajectories(config: &ScenarioConfig, spec: &MixtureSpec, out: &Path) -> Result<()> {
    let n = config.trajectories.n_samples.min(200);
    let seed = config.trajectories.seed;
    let record_stride = config.trajectories.record_stride;

    let trajectories = match spec {
        MixtureSpec::TwoLevelWell { state, t_end } => {
            let t_end = t_end.unwrap_or_else(|| state.beat_period());
            let flow = AnalyticFlow::TwoLevelWell { state: *state, t_end };
            let grid = bohmwork_core::Grid1D::new(0.0, state.width, 4096)?;
            let density: Vec<f64> =
                grid.xs().iter().map(|&x| state.value(x, 0.0).norm_sqr()).collect();
            let x0s = sample_initial_positions(&density, &grid, n, seed)?;
            integrate_all(&flow, &x0s, t_end / 4096.0, record_stride)?
        }
        _ => {
            let params = config.oscillator_params()?;
            match config.engine {
                EngineChoice::Analytic => {
                    let flow = analytic_flow(spec, &params)?;
                    let x0s = initial_positions_for(spec, &params, n, seed)?;
                    integrate_all(&flow, &x0s, params.tau / 4096.0, record_stride)?
                }
                _ => {
                    let grid = config.grid()?;
                    let psi0 = match spec {
                        MixtureSpec::PureCoherent { eta, .. } => {
                            coherent_wavefunction(&params, *eta, 0.0, grid)?
                        }
                        _ => eigen_wavefunction(&params, first_level(&config.mixture), 0.0, grid)?,
                    };
                    let plan = PropagationPlan::new(
                        params.hamiltonian(),
                        0.0,
                        params.tau,
                        config.propagation.n_steps,
                        config.propagation.snapshot_stride,
                    )?;
                    let series = propagate(&psi0, &plan)?;
                    let flow =
                        SnapshotFlow::new(&series, &params.hamiltonian(), DerivativeScheme::Spectral)?;
                    let density: Vec<f64> =
                        series.states[0].values.iter().map(|v| v.norm_sqr()).collect();
                    let x0s = sample_initial_positions(&density, &grid, n, seed)?;
                    let ode_dt = config
                        .trajectories
                        .ode_dt
                        .unwrap_or(series.spacing() / 4.0);
                    integrate_all(&flow, &x0s, ode_dt, record_stride)?
                }
            }
        }
    };
    report::write_trajectories_csv(&trajectories, &out.join("trajectories.csv"))?;
    Ok(())
}

fn analytic_flow(spec: &MixtureSpec, params: &bohmwork_core::OscillatorParams) -> Result<AnalyticFlow> {
    Ok(match spec {
        MixtureSpec::PureEigenstate { n, .. } => {
            AnalyticFlow::DrivenEigenstate { params: *params, n: *n }
        }
        MixtureSpec::PureCoherent { eta, .. } => AnalyticFlow::Coherent { params: *params, eta: *eta },
        MixtureSpec::ThermalEigenstates { .. } => {
            AnalyticFlow::DrivenEigenstate { params: *params, n: 0 }
        }
        MixtureSpec::ThermalCoherent { .. } => {
            AnalyticFlow::Coherent { params: *params, eta: params.alpha() }
        }
        MixtureSpec::TwoLevelWell { .. } => {
            return Err(BohmError::InvalidParameter("handled separately".into()))
        }
    })
}

fn initial_positions_for(
    spec: &MixtureSpec,
    params: &bohmwork_core::OscillatorParams,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let l = params.length_scale();
    let (density, grid): (Vec<f64>, bohmwork_core::Grid1D) = match spec {
        MixtureSpec::PureEigenstate { .. } | MixtureSpec::ThermalEigenstates { .. } => {
            let level = match spec {
                MixtureSpec::PureEigenstate { n: level, .. } => *level,
                _ => 0,
            };
            let half = ((2.0 * level as f64 + 1.0).sqrt() + 8.0) * l;
            let grid = bohmwork_core::Grid1D::new(-half, half, 8192)?;
            let d = grid
                .xs()
                .iter()
                .map(|&x| bohmwork_core::analytic::eigen_initial_density(params, level, x))
                .collect();
            (d, grid)
        }
        MixtureSpec::PureCoherent { .. } | MixtureSpec::ThermalCoherent { .. } => {
            let eta = match spec {
                MixtureSpec::PureCoherent { eta, .. } => *eta,
                _ => params.alpha(),
            };
            let half = (eta.norm() * 2.0 + 9.0) * l;
            let grid = bohmwork_core::Grid1D::new(-half, half, 8192)?;
            let d = grid
                .xs()
                .iter()
                .map(|&x| bohmwork_core::analytic::coherent_initial_density(params, eta, x))
                .collect();
            (d, grid)
        }
        MixtureSpec::TwoLevelWell { .. } => unreachable!("handled separately"),
    };
    sample_initial_positions(&density, &grid, n, seed)
}

fn integrate_all(
    flow: &dyn FlowField,
    x0s: &[f64],
    ode_dt: f64,
    record_stride: usize,
) -> Result<Vec<bohmwork_core::Trajectory>> {
    x0s.iter()
        .map(|&x0| integrate_trajectory(x0, flow, ode_dt, record_stride))
        .collect()
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

/// Run both thermal mixtures and the two-point-measurement reference over a
/// beta sweep; returns the rows as JSON values.
pub fn compare(config: &ScenarioConfig, betas: &[f64], out: &Path) -> Result<serde_json::Value> {
    if betas.is_empty() {
        return Err(BohmError::InvalidParameter("compare needs a non-empty beta list".into()));
    }
    config.validate()?;
    std::fs::create_dir_all(out)?;

    let params = config.oscillator_params()?;
    let seed = config.trajectories.seed;
    let n_samples = config.trajectories.n_samples;
    let bins = binning(config);

    // shared-label finite-difference probe of the small-beta slope
    let profile = coherent_exp_work_profile(&params, betas, 200_000, seed);

    let mut rows = Vec::new();
    for (i, &beta) in betas.iter().enumerate() {
        let eigen_spec =
            MixtureSpec::ThermalEigenstates { params, beta, n_max: None };
        let eigen = mixture_work_distribution(
            &eigen_spec,
            &Engine::Analytic,
            bohmwork_core::Allocation::PerStratum { samples: n_samples },
            seed,
            bins,
        )?;
        let coherent_spec = MixtureSpec::ThermalCoherent {
            params,
            beta,
            n_eta: n_samples,
            x0_per_eta: 1,
            antithetic: false,
        };
        let coherent = mixture_work_distribution(
            &coherent_spec,
            &Engine::Analytic,
            bohmwork_core::Allocation::PerStratum { samples: 1 },
            seed,
            bins,
        )?;
        let tmp = tmp_distribution(&params, beta, None)?;

        let (eigen_mean, eigen_se) = eigen.distribution.mean_work()?;
        let (coh_mean, coh_se) = coherent.distribution.mean_work()?;
        let eigen_exp = eigen.distribution.exp_work(beta);
        let coh_exp = coherent.distribution.exp_work(beta);
        let closed = exp_work_eigenmixture(&params, beta);
        let (coh_high_t, coh_high_t_valid) = exp_work_coherent_high_t(&params, beta);
        let quad = if beta * params.hbar * params.omega >= 0.1 {
            Some(exp_work_eigenmixture_quadrature(&params, beta))
        } else {
            None
        };
        let trace = trace_energy_change(&params, beta, 160);

        let combined = (eigen_exp.stderr.powi(2) + coh_exp.stderr.powi(2)).sqrt();
        rows.push(json!({
            "beta": beta,
            "eigen": {
                "mean_W": eigen_mean,
                "stderr_mean": eigen_se,
                "exp_work": report::exp_work_json(&eigen_exp),
            },
            "coherent": {
                "mean_W": coh_mean,
                "stderr_mean": coh_se,
                "exp_work": report::exp_work_json(&coh_exp),
                "exp_work_x0_integrated": {
                    "value": profile[i].0,
                    "stderr": profile[i].1,
                },
            },
            "tmp": {
                "mean": tmp.mean,
                "variance": tmp.variance,
            },
            "refs": {
                "exp_work_eigen_closed": closed,
                "exp_work_eigen_quadrature": quad,
                "exp_work_eigen_high_t": exp_work_eigenmixture_high_t(&params, beta),
                "exp_work_coherent_high_t": coh_high_t,
                "coherent_high_t_valid": coh_high_t_valid,
                "mean_W_trace": trace,
            },
            "flags": {
                "eigen_exp_matches_closed_3se":
                    (eigen_exp.value - closed).abs() <= 3.0 * eigen_exp.stderr,
                "tmp_mean_matches_bohmian":
                    (tmp.mean - eigen_mean).abs() <= 3.0 * eigen_se + 1e-5,
                "mixtures_differ_5se":
                    (eigen_exp.value - coh_exp.value).abs() > 5.0 * combined,
                "coherent_tail_risk": coh_exp.tail_flag,
            },
        }));
    }

    let doc = json!({
        "config_echo": serde_json::to_value(config).expect("config serializes"),
        "betas": betas,
        "rows": rows,
    });
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    std::fs::write(out.join("compare.json"), text + "\n")?;
    Ok(doc)
}

pub fn diagnostics_union(outcomes: &[EngineOutcome]) -> RunDiagnostics {
    let mut d = RunDiagnostics::default();
    for o in outcomes {
        let od = &o.run.diagnostics;
        d.node_collisions += od.node_collisions;
        d.domain_exits += od.domain_exits;
        d.norm_drift_max = d.norm_drift_max.max(od.norm_drift_max);
        d.renorm_count += od.renorm_count;
        d.work_consistency_max = d.work_consistency_max.max(od.work_consistency_max);
        d.n_samples += od.n_samples;
    }
    d
}
