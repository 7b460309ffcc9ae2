//! Result-file writers: summary.json, per-engine result files, histogram
//! CSV and the trajectory dump.

use std::path::Path;

use serde_json::json;

use bohmwork_core::mixture::ExpWork;
use bohmwork_core::tmp::TmpDistribution;
use bohmwork_core::{Result, Trajectory};

use crate::config::ScenarioConfig;
use crate::pipeline::{diagnostics_union, EngineOutcome};

pub fn exp_work_json(e: &ExpWork) -> serde_json::Value {
    json!({
        "beta": e.beta,
        "value": e.value,
        "stderr": e.stderr,
        "tail_flag": e.tail_flag,
    })
}

fn tmp_json(tmp: &TmpDistribution, tau: f64) -> serde_json::Value {
    json!({
        "beta": null,
        "tau": tau,
        "outcomes": tmp.outcomes.iter()
            .map(|(de, p)| json!({"dE": de, "p": p}))
            .collect::<Vec<_>>(),
        "mean": tmp.mean,
        "variance": tmp.variance,
    })
}

fn mixture_result_json(
    config: &ScenarioConfig,
    outcome: &EngineOutcome,
) -> Result<serde_json::Value> {
    let d = &outcome.run.distribution;
    let (mean, stderr) = d.mean_work()?;
    let exp = config.exp_work_beta().map(|beta| exp_work_json(&d.exp_work(beta)));
    Ok(json!({
        "spec": serde_json::to_value(&config.mixture).expect("mixture serializes"),
        "engine": outcome.label,
        "n_samples": outcome.run.diagnostics.n_samples,
        "mean_W": mean,
        "stderr_mean": stderr,
        "exp_work": exp,
        "histogram": {
            "edges": d.hist_edges,
            "masses": d.hist_masses,
        },
    }))
}

/// Write summary.json, result_<engine>.json and work_hist.csv.
pub fn write_run_reports(
    config: &ScenarioConfig,
    outcomes: &[EngineOutcome],
    tmp: Option<&TmpDistribution>,
    out: &Path,
) -> Result<()> {
    for outcome in outcomes {
        let doc = mixture_result_json(config, outcome)?;
        let text = serde_json::to_string_pretty(&doc).expect("report serializes");
        std::fs::write(out.join(format!("result_{}.json", outcome.label)), text + "\n")?;
    }

    // the headline engine is the numeric one when present
    let headline = outcomes
        .iter()
        .find(|o| o.label == "numeric")
        .or_else(|| outcomes.first())
        .expect("at least one engine ran");
    let d = &headline.run.distribution;
    let (mean, stderr) = d.mean_work()?;
    let exp = config.exp_work_beta().map(|beta| exp_work_json(&d.exp_work(beta)));
    let diag = diagnostics_union(outcomes);

    let tmp_block = match tmp {
        Some(t) => {
            let mut block = tmp_json(t, config.oscillator.tau);
            block["beta"] = json!(config.exp_work_beta());
            block
        }
        None => serde_json::Value::Null,
    };

    let summary = json!({
        "config_echo": serde_json::to_value(config).expect("config serializes"),
        "mean_W": mean,
        "stderr": stderr,
        "exp_work": exp,
        "tmp": tmp_block,
        "diagnostics": {
            "node_collisions": diag.node_collisions,
            "norm_drift": diag.norm_drift_max,
            "work_consistency_max": diag.work_consistency_max,
        },
    });
    let text = serde_json::to_string_pretty(&summary).expect("report serializes");
    std::fs::write(out.join("summary.json"), text + "\n")?;

    let mut csv = String::from("bin_lo,bin_hi,mass\n");
    for (i, mass) in d.hist_masses.iter().enumerate() {
        csv.push_str(&format!("{},{},{}\n", d.hist_edges[i], d.hist_edges[i + 1], mass));
    }
    std::fs::write(out.join("work_hist.csv"), csv)?;
    Ok(())
}

/// Trajectory dump: one row per recorded point.
pub fn write_trajectories_csv(trajectories: &[Trajectory], path: &Path) -> Result<()> {
    let mut csv = String::from("sample,x0,t,x,E,W_partial\n");
    for (sample, traj) in trajectories.iter().enumerate() {
        for (((t, x), e), w) in traj
            .times
            .iter()
            .zip(&traj.positions)
            .zip(&traj.energies)
            .zip(&traj.work_partial)
        {
            csv.push_str(&format!("{sample},{},{t},{x},{e},{w}\n", traj.x0));
        }
    }
    std::fs::write(path, csv)?;
    Ok(())
}
