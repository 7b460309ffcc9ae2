//! Scenario configuration: strict JSON schema, dotted-path overrides and
//! up-front validation of every module precondition.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use bohmwork_core::analytic::{OscillatorParams, TwoLevelWellState};
use bohmwork_core::fields::DerivativeScheme;
use bohmwork_core::grid::Grid1D;
use bohmwork_core::mixture::{
    auto_n_max, thermal_weights, validate_domain, Allocation, Engine, MixtureSpec, NumericConfig,
};
use bohmwork_core::propagator::PropagationPlan;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorSection {
    pub mass: f64,
    pub omega: f64,
    pub amplitude: f64,
    pub hbar: f64,
    pub tau: f64,
}

impl Default for OscillatorSection {
    fn default() -> Self {
        OscillatorSection {
            mass: 1.0,
            omega: 1.0,
            amplitude: 1.0,
            hbar: 1.0,
            tau: std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { x_min: -12.0, x_max: 12.0, n_points: 2048 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationSection {
    pub n_steps: usize,
    pub snapshot_stride: usize,
}

impl Default for PropagationSection {
    fn default() -> Self {
        PropagationSection { n_steps: 4096, snapshot_stride: 4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySection {
    pub n_samples: usize,
    /// Defaults to snapshot spacing / 4.
    pub ode_dt: Option<f64>,
    pub seed: u64,
    pub record_stride: usize,
    pub work_consistency_tol: f64,
    pub failure_budget: usize,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        TrajectorySection {
            n_samples: 10_000,
            ode_dt: None,
            seed: 42,
            record_stride: 64,
            work_consistency_tol: 1e-3,
            failure_budget: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MixtureSection {
    PureEigenstate {
        n: usize,
    },
    PureCoherent {
        eta_re: f64,
        eta_im: f64,
    },
    ThermalEigenstates {
        beta: f64,
        #[serde(default)]
        n_max: Option<usize>,
    },
    ThermalCoherent {
        beta: f64,
        #[serde(default)]
        n_eta: Option<usize>,
        #[serde(default)]
        x0_per_eta: Option<usize>,
        #[serde(default)]
        antithetic: bool,
    },
    TwoLevelWell {
        width: f64,
        c0_re: f64,
        c0_im: f64,
        c1_re: f64,
        c1_im: f64,
        mass: f64,
        hbar: f64,
        #[serde(default)]
        t_end: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineChoice {
    Analytic,
    Numeric,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum AllocationSection {
    Proportional {
        budget: usize,
        #[serde(default = "default_min_per_stratum")]
        min_per_stratum: usize,
    },
    PerStratum {
        samples: usize,
    },
}

fn default_min_per_stratum() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub oscillator: OscillatorSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub propagation: PropagationSection,
    #[serde(default)]
    pub trajectories: TrajectorySection,
    pub mixture: MixtureSection,
    #[serde(default = "default_engine")]
    pub engine: EngineChoice,
    #[serde(default)]
    pub allocation: Option<AllocationSection>,
    /// Beta for the exponentiated-work estimate; defaults to the mixture's
    /// thermal beta when present.
    #[serde(default)]
    pub exp_work_beta: Option<f64>,
    /// Betas for the `compare` subcommand when not given on the command line.
    #[serde(default)]
    pub compare_betas: Option<Vec<f64>>,
    /// Attach the two-point-measurement distribution to the summary
    /// (defaults to on for thermal mixtures).
    #[serde(default)]
    pub include_tmp: Option<bool>,
    /// Fixed histogram bin count; Freedman-Diaconis when absent.
    #[serde(default)]
    pub histogram_bins: Option<usize>,
}

fn default_engine() -> EngineChoice {
    EngineChoice::Analytic
}

/// Apply one `--set key.path=value` override onto the raw JSON document.
pub fn apply_override(doc: &mut serde_json::Value, assignment: &str) -> Result<(), String> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("override '{assignment}' is not of the form key.path=value"))?;
    let value: serde_json::Value =
        serde_json::from_str(raw).unwrap_or(serde_json::Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| format!("override path '{path}' does not address an object"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(serde_json::Map::new()));
    }
    unreachable!("loop returns on the last path segment")
}

impl ScenarioConfig {
    pub fn oscillator_params(&self) -> bohmwork_core::Result<OscillatorParams> {
        let o = &self.oscillator;
        OscillatorParams::new(o.mass, o.omega, o.amplitude, o.hbar, o.tau)
    }

    pub fn grid(&self) -> bohmwork_core::Result<Grid1D> {
        Grid1D::new(self.grid.x_min, self.grid.x_max, self.grid.n_points)
    }

    pub fn mixture_spec(&self) -> bohmwork_core::Result<MixtureSpec> {
        Ok(match &self.mixture {
            MixtureSection::PureEigenstate { n } => MixtureSpec::PureEigenstate {
                params: self.oscillator_params()?,
                n: *n,
            },
            MixtureSection::PureCoherent { eta_re, eta_im } => MixtureSpec::PureCoherent {
                params: self.oscillator_params()?,
                eta: Complex64::new(*eta_re, *eta_im),
            },
            MixtureSection::ThermalEigenstates { beta, n_max } => {
                MixtureSpec::ThermalEigenstates {
                    params: self.oscillator_params()?,
                    beta: *beta,
                    n_max: *n_max,
                }
            }
            MixtureSection::ThermalCoherent { beta, n_eta, x0_per_eta, antithetic } => {
                MixtureSpec::ThermalCoherent {
                    params: self.oscillator_params()?,
                    beta: *beta,
                    n_eta: n_eta.unwrap_or(self.trajectories.n_samples),
                    x0_per_eta: x0_per_eta.unwrap_or(1),
                    antithetic: *antithetic,
                }
            }
            MixtureSection::TwoLevelWell {
                width,
                c0_re,
                c0_im,
                c1_re,
                c1_im,
                mass,
                hbar,
                t_end,
            } => MixtureSpec::TwoLevelWell {
                state: TwoLevelWellState::new(
                    *width,
                    Complex64::new(*c0_re, *c0_im),
                    Complex64::new(*c1_re, *c1_im),
                    *mass,
                    *hbar,
                )?,
                t_end: *t_end,
            },
        })
    }

    pub fn allocation(&self) -> Allocation {
        match &self.allocation {
            Some(AllocationSection::Proportional { budget, min_per_stratum }) => {
                Allocation::Proportional { budget: *budget, min_per_stratum: *min_per_stratum }
            }
            Some(AllocationSection::PerStratum { samples }) => {
                Allocation::PerStratum { samples: *samples }
            }
            None => Allocation::PerStratum { samples: self.trajectories.n_samples },
        }
    }

    pub fn numeric_engine(&self) -> bohmwork_core::Result<Engine> {
        Ok(Engine::Numeric(NumericConfig {
            grid: self.grid()?,
            n_steps: self.propagation.n_steps,
            snapshot_stride: self.propagation.snapshot_stride,
            ode_dt: self.trajectories.ode_dt,
            scheme: DerivativeScheme::Spectral,
            failure_budget: self.trajectories.failure_budget,
        }))
    }

    pub fn exp_work_beta(&self) -> Option<f64> {
        self.exp_work_beta.or(match &self.mixture {
            MixtureSection::ThermalEigenstates { beta, .. }
            | MixtureSection::ThermalCoherent { beta, .. } => Some(*beta),
            _ => None,
        })
    }

    pub fn include_tmp(&self) -> bool {
        self.include_tmp.unwrap_or(matches!(
            self.mixture,
            MixtureSection::ThermalEigenstates { .. } | MixtureSection::ThermalCoherent { .. }
        ))
    }

    /// Check every module precondition before any computation starts.
    pub fn validate(&self) -> bohmwork_core::Result<()> {
        let spec = self.mixture_spec()?;
        if self.trajectories.n_samples < 1 {
            return Err(bohmwork_core::BohmError::InvalidParameter(
                "trajectories.n_samples must be >= 1".into(),
            ));
        }
        if let MixtureSection::ThermalEigenstates { beta, n_max } = &self.mixture {
            let params = self.oscillator_params()?;
            let top = n_max.unwrap_or_else(|| auto_n_max(&params, *beta));
            thermal_weights(&params, *beta, top)?;
        }
        if let Some(beta) = self.mixture_beta() {
            if !(beta > 0.0) {
                return Err(bohmwork_core::BohmError::InvalidParameter(format!(
                    "beta must be positive, got {beta}"
                )));
            }
        }
        if matches!(self.engine, EngineChoice::Numeric | EngineChoice::Both) {
            let grid = self.grid()?;
            validate_domain(&spec, &grid)?;
            if spec.oscillator_params().is_some() {
                let params = self.oscillator_params()?;
                let plan = PropagationPlan::new(
                    params.hamiltonian(),
                    0.0,
                    params.tau,
                    self.propagation.n_steps,
                    self.propagation.snapshot_stride,
                )?;
                let spacing = plan.dt() * self.propagation.snapshot_stride as f64;
                if let Some(ode_dt) = self.trajectories.ode_dt {
                    if ode_dt > spacing {
                        return Err(bohmwork_core::BohmError::InvalidParameter(format!(
                            "ode_dt {ode_dt} exceeds the snapshot spacing {spacing}"
                        )));
                    }
                    if spacing > 4.0 * ode_dt {
                        return Err(bohmwork_core::BohmError::InvalidParameter(format!(
                            "snapshot spacing {spacing} exceeds 4 x ode_dt; \
                             lower propagation.snapshot_stride"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn mixture_beta(&self) -> Option<f64> {
        match &self.mixture {
            MixtureSection::ThermalEigenstates { beta, .. }
            | MixtureSection::ThermalCoherent { beta, .. } => Some(*beta),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg: ScenarioConfig =
            serde_json::from_str(r#"{"mixture":{"kind":"pure_eigenstate","n":0}}"#).unwrap();
        assert_eq!(cfg.grid.n_points, 2048);
        assert_eq!(cfg.trajectories.seed, 42);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<ScenarioConfig>(
            r#"{"mixture":{"kind":"pure_eigenstate","n":0},"bogus":1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn missing_mixture_reported() {
        let err = serde_json::from_str::<ScenarioConfig>("{}").unwrap_err();
        assert!(err.to_string().contains("mixture"));
    }

    #[test]
    fn overrides_apply_dotted_paths() {
        let mut doc: serde_json::Value =
            serde_json::from_str(r#"{"mixture":{"kind":"pure_eigenstate","n":0}}"#).unwrap();
        apply_override(&mut doc, "oscillator.amplitude=0.5").unwrap();
        apply_override(&mut doc, "trajectories.seed=7").unwrap();
        let cfg: ScenarioConfig = serde_json::from_value(doc).unwrap();
        assert_eq!(cfg.oscillator.amplitude, 0.5);
        assert_eq!(cfg.trajectories.seed, 7);
    }

    #[test]
    fn numeric_thermal_on_narrow_grid_rejected() {
        let cfg: ScenarioConfig = serde_json::from_str(
            r#"{"mixture":{"kind":"thermal_eigenstates","beta":1.0},"engine":"numeric"}"#,
        )
        .unwrap();
        assert!(cfg.validate().is_err());
    }
}
