//! Statistical mixtures over pure states, stratified work-distribution
//! assembly and the moment / exponentiated-work estimators.
//!
//! A mixture is a preparation recipe, not a density operator: the thermal
//! eigenstate mixture and the thermal coherent-state mixture share one
//! density operator yet produce different work statistics beyond the mean.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::analytic::{
    coherent_wavefunction, coherent_work, eigen_initial_density,
    eigen_wavefunction, eigen_work, OscillatorParams, TwoLevelWellState,
};
use crate::error::{BohmError, Result};
use crate::fields::DerivativeScheme;
use crate::grid::Grid1D;
use crate::propagator::{propagate, PropagationPlan};
use crate::stats;
use crate::trajectories::{
    run_ensemble, AnalyticFlow, SnapshotFlow, TrajectorySpec,
};

/// Tail bound enforced on thermal truncations.
pub const THERMAL_TAIL_BOUND: f64 = 1e-8;

// stream-index domains keep every RNG draw in the run collision-free
const STREAM_X0: u64 = 0;
const STREAM_ETA: u64 = 1 << 32;
const STREAM_PROFILE: u64 = 2 << 32;

/// Initial statistical mixture to draw trajectories from.
#[derive(Debug, Clone)]
pub enum MixtureSpec {
    PureEigenstate {
        params: OscillatorParams,
        n: usize,
    },
    PureCoherent {
        params: OscillatorParams,
        eta: Complex64,
    },
    ThermalEigenstates {
        params: OscillatorParams,
        beta: f64,
        /// Truncation; `None` picks the smallest level count whose tail
        /// weight is below `THERMAL_TAIL_BOUND`.
        n_max: Option<usize>,
    },
    ThermalCoherent {
        params: OscillatorParams,
        beta: f64,
        /// Number of coherent labels drawn from the thermal label density.
        n_eta: usize,
        /// Trajectories per label.
        x0_per_eta: usize,
        /// Draw labels and positions in antithetic pairs (variance
        /// reduction; estimates stay unbiased, reported errors conservative).
        antithetic: bool,
    },
    TwoLevelWell {
        state: TwoLevelWellState,
        /// Protocol end; `None` runs one full beat period.
        t_end: Option<f64>,
    },
}

impl MixtureSpec {
    pub fn beta(&self) -> Option<f64> {
        match self {
            MixtureSpec::ThermalEigenstates { beta, .. }
            | MixtureSpec::ThermalCoherent { beta, .. } => Some(*beta),
            _ => None,
        }
    }

    pub fn oscillator_params(&self) -> Option<&OscillatorParams> {
        match self {
            MixtureSpec::PureEigenstate { params, .. }
            | MixtureSpec::PureCoherent { params, .. }
            | MixtureSpec::ThermalEigenstates { params, .. }
            | MixtureSpec::ThermalCoherent { params, .. } => Some(params),
            MixtureSpec::TwoLevelWell { .. } => None,
        }
    }
}

/// Work-sample source behind the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Analytic,
    Numeric,
}

/// Numeric pipeline settings (grid, propagation and ODE discretization).
#[derive(Debug, Clone)]
pub struct NumericConfig {
    pub grid: Grid1D,
    pub n_steps: usize,
    pub snapshot_stride: usize,
    /// Defaults to the snapshot spacing / 4 rule when `None`.
    pub ode_dt: Option<f64>,
    pub scheme: DerivativeScheme,
    /// Tolerated per-stratum trajectory aborts (node collisions of starts
    /// drawn inside a near-node cell of an excited level); aborts are
    /// counted in the diagnostics either way.
    pub failure_budget: usize,
}

/// Engine selection: closed forms or the propagate-and-integrate pipeline.
#[derive(Debug, Clone)]
pub enum Engine {
    Analytic,
    Numeric(NumericConfig),
}

impl Engine {
    pub fn kind(&self) -> EngineKind {
        match self {
            Engine::Analytic => EngineKind::Analytic,
            Engine::Numeric(_) => EngineKind::Numeric,
        }
    }
}

/// Sample allocation across mixture strata.
#[derive(Debug, Clone, Copy)]
pub enum Allocation {
    /// Total budget split proportionally to the stratum weights with a
    /// per-stratum floor.
    Proportional { budget: usize, min_per_stratum: usize },
    /// The same sample count in every stratum.
    PerStratum { samples: usize },
}

impl Allocation {
    fn counts(&self, weights: &[f64]) -> Result<Vec<usize>> {
        match *self {
            Allocation::PerStratum { samples } => {
                if samples == 0 {
                    return Err(BohmError::AllocationTooSmall {
                        budget: 0,
                        strata: weights.len(),
                        min_per_stratum: 1,
                    });
                }
                Ok(vec![samples; weights.len()])
            }
            Allocation::Proportional { budget, min_per_stratum } => {
                let floor = min_per_stratum.max(1);
                if budget < floor * weights.len() {
                    return Err(BohmError::AllocationTooSmall {
                        budget,
                        strata: weights.len(),
                        min_per_stratum: floor,
                    });
                }
                Ok(weights
                    .iter()
                    .map(|w| ((budget as f64 * w).round() as usize).max(floor))
                    .collect())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// thermal weights and coherent labels
// ---------------------------------------------------------------------------

/// Smallest truncation whose tail weight stays below the bound.
pub fn auto_n_max(params: &OscillatorParams, beta: f64) -> usize {
    let u = (-beta * params.hbar * params.omega).exp();
    let mut n = 0usize;
    while u.powi(n as i32 + 1) >= THERMAL_TAIL_BOUND && n < 100_000 {
        n += 1;
    }
    n
}

/// Thermal level weights p_n = (1 - u) u^n, renormalized over the truncation.
/// Errors when the discarded tail u^{n_max + 1} exceeds the bound.
pub fn thermal_weights(params: &OscillatorParams, beta: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(beta > 0.0) {
        return Err(BohmError::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let u = (-beta * params.hbar * params.omega).exp();
    let tail = u.powi(n_max as i32 + 1);
    if tail >= THERMAL_TAIL_BOUND {
        return Err(BohmError::TruncationBound { tail, bound: THERMAL_TAIL_BOUND, n_max });
    }
    let mut weights: Vec<f64> = (0..=n_max).map(|n| u.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Label standard deviation per real component of the thermal coherent-state
/// density, 1 / sqrt(2 (e^{beta hbar w} - 1)).
pub fn coherent_label_sigma(params: &OscillatorParams, beta: f64) -> f64 {
    (1.0 / (2.0 * ((beta * params.hbar * params.omega).exp() - 1.0))).sqrt()
}

/// Draw coherent labels eta = alpha + sigma (z1 + i z2), one stream each.
pub fn sample_coherent_labels(
    params: &OscillatorParams,
    beta: f64,
    n: usize,
    seed: u64,
) -> Vec<Complex64> {
    let sigma = coherent_label_sigma(params, beta);
    let alpha = params.alpha();
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(STREAM_ETA | i as u64);
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            alpha + Complex64::new(sigma * z1, sigma * z2)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// work distribution
// ---------------------------------------------------------------------------

/// Histogram binning policy.
#[derive(Debug, Clone, Copy, Default)]
pub enum Binning {
    #[default]
    FreedmanDiaconis,
    Fixed(usize),
}

/// Weighted work samples plus their histogram.
#[derive(Debug, Clone)]
pub struct WorkDistribution {
    /// (work, weight) pairs; weights sum to one.
    pub samples: Vec<(f64, f64)>,
    pub hist_edges: Vec<f64>,
    pub hist_masses: Vec<f64>,
    pub n_effective: f64,
}

impl WorkDistribution {
    pub fn from_weighted_samples(mut samples: Vec<(f64, f64)>, binning: Binning) -> Result<Self> {
        if samples.is_empty() {
            return Err(BohmError::DegenerateWeights { n_effective: 0.0 });
        }
        let total: f64 = samples.iter().map(|(_, w)| w).sum();
        if !(total > 0.0) {
            return Err(BohmError::DegenerateWeights { n_effective: 0.0 });
        }
        debug_assert!((total - 1.0).abs() < 1e-9, "weights should arrive normalized");
        for (_, w) in &mut samples {
            *w /= total;
        }
        let edges = match binning {
            Binning::FreedmanDiaconis => stats::freedman_diaconis_edges(&samples),
            Binning::Fixed(n_bins) => {
                let lo = samples.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let hi = samples.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1e-9, lo + 1e-9) };
                let n = n_bins.max(1);
                (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
            }
        };
        let n_bins = edges.len() - 1;
        let mut masses = vec![0.0; n_bins];
        let lo = edges[0];
        let hi = edges[n_bins];
        let width = (hi - lo) / n_bins as f64;
        for &(x, w) in &samples {
            let idx = (((x - lo) / width).floor() as isize).clamp(0, n_bins as isize - 1) as usize;
            masses[idx] += w;
        }
        let n_effective =
            stats::effective_sample_size(&samples.iter().map(|p| p.1).collect::<Vec<_>>());
        Ok(WorkDistribution { samples, hist_edges: edges, hist_masses: masses, n_effective })
    }

    /// Weighted mean work with standard error.
    pub fn mean_work(&self) -> Result<(f64, f64)> {
        if self.n_effective < 2.0 {
            return Err(BohmError::DegenerateWeights { n_effective: self.n_effective });
        }
        stats::weighted_mean_stderr(&self.samples)
    }

    /// Weighted <e^{-beta W}> with standard error and heavy-tail diagnostic:
    /// the flag trips when the top 1% of contributions carries more than
    /// half of the estimator mass.
    pub fn exp_work(&self, beta: f64) -> ExpWork {
        let transformed: Vec<(f64, f64)> =
            self.samples.iter().map(|&(w, p)| ((-beta * w).exp(), p)).collect();
        let (value, stderr) = stats::weighted_mean_stderr(&transformed)
            .unwrap_or((f64::NAN, f64::NAN));
        let mut contributions: Vec<f64> = transformed.iter().map(|&(g, p)| g * p).collect();
        contributions.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = contributions.iter().sum();
        let top_count = (contributions.len() as f64 * 0.01).ceil() as usize;
        let top_mass: f64 = contributions.iter().take(top_count.max(1)).sum();
        let tail_flag = total > 0.0 && top_mass > 0.5 * total;
        ExpWork { beta, value, stderr, tail_flag }
    }
}

/// Exponentiated-work estimate.
#[derive(Debug, Clone, Copy)]
pub struct ExpWork {
    pub beta: f64,
    pub value: f64,
    pub stderr: f64,
    pub tail_flag: bool,
}

/// Numeric-pipeline counters surfaced next to the estimates.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunDiagnostics {
    pub node_collisions: usize,
    pub domain_exits: usize,
    pub norm_drift_max: f64,
    pub renorm_count: usize,
    pub work_consistency_max: f64,
    pub n_samples: usize,
}

/// A finished mixture run.
pub struct MixtureRun {
    pub distribution: WorkDistribution,
    pub diagnostics: RunDiagnostics,
}

// ---------------------------------------------------------------------------
// stratified assembly
// ---------------------------------------------------------------------------

enum Stratum {
    Eigen { n: usize },
    Coherent { eta: Complex64 },
    Well,
}

/// Half-width the grid must cover for a state: classical support plus drive
/// drift plus five ground-state lengths of tail margin.
pub fn required_half_width(params: &OscillatorParams, stratum_support: f64) -> f64 {
    let l = params.length_scale();
    let drift_max = params.amplitude / (params.mass * params.omega * params.omega)
        * (params.omega * params.tau + 1.0);
    stratum_support + drift_max + 5.0 * l
}

/// Domain-coverage check for every state a numeric run will propagate.
pub fn validate_domain(spec: &MixtureSpec, grid: &Grid1D) -> Result<()> {
    let half = grid.x_max.min(-grid.x_min);
    let check = |needed: f64, what: &str| -> Result<()> {
        if needed > half {
            return Err(BohmError::InvalidGrid(format!(
                "grid half-width {half} too small for {what}: need >= {needed:.2} \
                 (classical support + drive drift + tail margin)"
            )));
        }
        Ok(())
    };
    match spec {
        MixtureSpec::PureEigenstate { params, n } => {
            let support = ((2.0 * *n as f64 + 1.0).sqrt()) * params.length_scale();
            check(required_half_width(params, support), &format!("eigenstate n = {n}"))
        }
        MixtureSpec::ThermalEigenstates { params, beta, n_max } => {
            let n_top = n_max.unwrap_or_else(|| auto_n_max(params, *beta));
            let support = ((2.0 * n_top as f64 + 1.0).sqrt()) * params.length_scale();
            check(required_half_width(params, support), &format!("eigenstate n = {n_top}"))
        }
        MixtureSpec::PureCoherent { params, eta } => {
            let support = (eta.norm() * std::f64::consts::SQRT_2 + 1.0) * params.length_scale();
            check(required_half_width(params, support), "coherent state")
        }
        MixtureSpec::ThermalCoherent { params, beta, .. } => {
            // cover labels out to five sigma of the label density
            let spread = eta_support(params, *beta);
            check(required_half_width(params, spread), "thermal coherent labels")
        }
        MixtureSpec::TwoLevelWell { state, .. } => {
            if grid.x_min > 0.0 || grid.x_max < state.width {
                return Err(BohmError::InvalidGrid(format!(
                    "grid [{}, {}] does not contain the box [0, {}]",
                    grid.x_min, grid.x_max, state.width
                )));
            }
            Ok(())
        }
    }
}

fn eta_support(params: &OscillatorParams, beta: f64) -> f64 {
    let sigma = coherent_label_sigma(params, beta);
    let max_eta = params.alpha().norm() + 5.0 * sigma * std::f64::consts::SQRT_2;
    (max_eta * std::f64::consts::SQRT_2 + 1.0) * params.length_scale()
}

fn strata_for(spec: &MixtureSpec, seed: u64) -> Result<Vec<(f64, Stratum)>> {
    Ok(match spec {
        MixtureSpec::PureEigenstate { n, .. } => vec![(1.0, Stratum::Eigen { n: *n })],
        MixtureSpec::PureCoherent { eta, .. } => vec![(1.0, Stratum::Coherent { eta: *eta })],
        MixtureSpec::ThermalEigenstates { params, beta, n_max } => {
            let n_top = n_max.unwrap_or_else(|| auto_n_max(params, *beta));
            thermal_weights(params, *beta, n_top)?
                .into_iter()
                .enumerate()
                .map(|(n, w)| (w, Stratum::Eigen { n }))
                .collect()
        }
        MixtureSpec::ThermalCoherent { params, beta, n_eta, antithetic, .. } => {
            let count = if *antithetic { n_eta / 2 } else { *n_eta };
            let labels = sample_coherent_labels(params, *beta, count.max(1), seed);
            let alpha = params.alpha();
            let mut strata = Vec::new();
            for eta in labels {
                strata.push(Stratum::Coherent { eta });
                if *antithetic {
                    strata.push(Stratum::Coherent { eta: 2.0 * alpha - eta });
                }
            }
            let w = 1.0 / strata.len() as f64;
            strata.into_iter().map(|s| (w, s)).collect()
        }
        MixtureSpec::TwoLevelWell { .. } => vec![(1.0, Stratum::Well)],
    })
}

/// Assemble the mixture work distribution with the chosen engine.
///
/// Sampling is stratified: every stratum draws its own trajectories and each
/// work value carries weight (stratum weight) / (samples in stratum). The
/// per-trajectory RNG stream is derived from (seed, global sample index), so
/// results are reproducible under any parallel schedule.
pub fn mixture_work_distribution(
    spec: &MixtureSpec,
    engine: &Engine,
    alloc: Allocation,
    seed: u64,
    binning: Binning,
) -> Result<MixtureRun> {
    let strata = strata_for(spec, seed)?;
    let counts = match spec {
        // the coherent-label mixture carries its own per-label budget
        MixtureSpec::ThermalCoherent { x0_per_eta, .. } => {
            vec![(*x0_per_eta).max(1); strata.len()]
        }
        _ => alloc.counts(&strata.iter().map(|(w, _)| *w).collect::<Vec<_>>())?,
    };
    let shared_samplers = match (spec, engine) {
        (MixtureSpec::ThermalEigenstates { params, beta, n_max }, Engine::Analytic) => {
            let n_top = n_max.unwrap_or_else(|| auto_n_max(params, *beta));
            Some(eigen_samplers_shared(params, n_top)?)
        }
        _ => None,
    };

    let mut samples = Vec::new();
    let mut diag = RunDiagnostics::default();
    let mut stream_base = 0u64;

    for ((weight, stratum), k) in strata.iter().zip(&counts) {
        let k = *k;
        let per_sample_weight = weight / k as f64;
        let works = stratum_works(
            spec,
            stratum,
            engine,
            k,
            seed,
            stream_base,
            shared_samplers.as_deref(),
            &mut diag,
        )?;
        for w in works {
            samples.push((w, per_sample_weight));
        }
        stream_base += k as u64;
        diag.n_samples += k;
    }

    let distribution = WorkDistribution::from_weighted_samples(samples, binning)?;
    Ok(MixtureRun { distribution, diagnostics: diag })
}

#[allow(clippy::too_many_arguments)]
fn stratum_works(
    spec: &MixtureSpec,
    stratum: &Stratum,
    engine: &Engine,
    k: usize,
    seed: u64,
    stream_base: u64,
    shared_samplers: Option<&[crate::trajectories::GriddedSampler]>,
    diag: &mut RunDiagnostics,
) -> Result<Vec<f64>> {
    match engine {
        Engine::Analytic => {
            analytic_stratum_works(spec, stratum, k, seed, stream_base, shared_samplers, diag)
        }
        Engine::Numeric(cfg) => numeric_stratum_works(spec, stratum, cfg, k, seed, stream_base, diag),
    }
}

fn uniform_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[allow(clippy::too_many_arguments)]
fn analytic_stratum_works(
    spec: &MixtureSpec,
    stratum: &Stratum,
    k: usize,
    seed: u64,
    stream_base: u64,
    shared_samplers: Option<&[crate::trajectories::GriddedSampler]>,
    diag: &mut RunDiagnostics,
) -> Result<Vec<f64>> {
    match stratum {
        Stratum::Eigen { n } => {
            let params = spec.oscillator_params().expect("eigen stratum has params");
            let local;
            let sampler = match shared_samplers {
                Some(samplers) => &samplers[*n],
                None => {
                    let (density, grid) = eigen_density_grid(params, *n)?;
                    local = crate::trajectories::GriddedSampler::new(&density, &grid)?;
                    &local
                }
            };
            Ok((0..k)
                .map(|i| {
                    let mut rng = uniform_stream(seed, STREAM_X0 | (stream_base + i as u64));
                    eigen_work(params, sampler.quantile(rng.random::<f64>()))
                })
                .collect())
        }
        Stratum::Coherent { eta } => {
            let params = spec.oscillator_params().expect("coherent stratum has params");
            let antithetic = matches!(
                spec,
                MixtureSpec::ThermalCoherent { antithetic: true, .. }
            );
            let center = eta.re * std::f64::consts::SQRT_2 * params.length_scale();
            let sigma_x = (params.hbar / (2.0 * params.mass * params.omega)).sqrt();
            Ok((0..k)
                .map(|i| {
                    let mut rng = uniform_stream(seed, STREAM_X0 | (stream_base + i as u64));
                    let mut z: f64 = StandardNormal.sample(&mut rng);
                    if antithetic && (stream_base + i as u64) % 2 == 1 {
                        z = -z;
                    }
                    coherent_work(params, *eta, center + sigma_x * z)
                })
                .collect())
        }
        Stratum::Well => well_works(spec, k, seed, stream_base, diag, None),
    }
}

fn eigen_density_grid(params: &OscillatorParams, n: usize) -> Result<(Vec<f64>, Grid1D)> {
    let l = params.length_scale();
    let half = ((2.0 * n as f64 + 1.0).sqrt() + 8.0) * l;
    // keep several nodes per density oscillation for highly excited levels
    let n_points = if n > 500 { 16384 } else { 8192 };
    let grid = Grid1D::new(-half, half, n_points)?;
    let density: Vec<f64> =
        grid.xs().iter().map(|&x| eigen_initial_density(params, n, x)).collect();
    Ok((density, grid))
}

/// Initial-position samplers for every level up to `n_top` in one recurrence
/// sweep over a shared grid: the eigenfunction recurrence yields all levels
/// at a point in O(n_top), so this costs O(grid * n_top) instead of the
/// O(grid * n_top^2) of per-level builds.
fn eigen_samplers_shared(
    params: &OscillatorParams,
    n_top: usize,
) -> Result<Vec<crate::trajectories::GriddedSampler>> {
    let l = params.length_scale();
    let half = ((2.0 * n_top as f64 + 1.0).sqrt() + 8.0) * l;
    let n_points = if n_top > 500 { 16384 } else { 8192 };
    let grid = Grid1D::new(-half, half, n_points)?;
    let scale = 1.0 / l;
    let norm0 = (scale * scale / std::f64::consts::PI).powf(0.25);
    let mut densities = vec![vec![0.0; n_points]; n_top + 1];
    for (i, &x) in grid.xs().iter().enumerate() {
        let xi = scale * x;
        let mut f_prev = 0.0;
        let mut f = norm0 * (-0.5 * xi * xi).exp();
        densities[0][i] = f * f;
        for k in 0..n_top {
            let kf = k as f64;
            let f_next = (2.0 / (kf + 1.0)).sqrt() * xi * f - (kf / (kf + 1.0)).sqrt() * f_prev;
            f_prev = f;
            f = f_next;
            densities[k + 1][i] = f * f;
        }
    }
    densities
        .iter()
        .map(|d| crate::trajectories::GriddedSampler::new(d, &grid))
        .collect()
}

fn well_works(
    spec: &MixtureSpec,
    k: usize,
    seed: u64,
    stream_base: u64,
    diag: &mut RunDiagnostics,
    ode_dt: Option<f64>,
) -> Result<Vec<f64>> {
    let MixtureSpec::TwoLevelWell { state, t_end } = spec else {
        return Err(BohmError::InvalidParameter("well stratum without well spec".into()));
    };
    let t_end = t_end.unwrap_or_else(|| state.beat_period());
    let grid = Grid1D::new(0.0, state.width, 4096)?;
    let density: Vec<f64> = grid.xs().iter().map(|&x| state.value(x, 0.0).norm_sqr()).collect();
    let flow = AnalyticFlow::TwoLevelWell { state: *state, t_end };
    // superpositions form momentary nodes mid-beat; fixed-step integration
    // needs a fine default step to keep near-node work accumulation honest
    let dt = ode_dt.unwrap_or(t_end / 16384.0);
    let mut spec_t = TrajectorySpec::new(k, seed, dt)?;
    spec_t.record_stride = usize::MAX;
    let sampler = crate::trajectories::GriddedSampler::new(&density, &grid)?;
    let x0s: Vec<f64> = (0..k)
        .map(|i| {
            let mut rng = uniform_stream(seed, STREAM_X0 | (stream_base + i as u64));
            sampler.quantile(rng.random::<f64>())
        })
        .collect();
    let result = run_ensemble(&spec_t, &flow, &x0s)?;
    diag.node_collisions += result.node_collisions;
    diag.domain_exits += result.domain_exits;
    diag.work_consistency_max = diag.work_consistency_max.max(result.work_consistency_max);
    Ok(result.trajectories.iter().map(|t| t.work_integral).collect())
}

fn numeric_stratum_works(
    spec: &MixtureSpec,
    stratum: &Stratum,
    cfg: &NumericConfig,
    k: usize,
    seed: u64,
    stream_base: u64,
    diag: &mut RunDiagnostics,
) -> Result<Vec<f64>> {
    let params = match spec.oscillator_params() {
        Some(p) => *p,
        None => {
            // hard walls are not representable on the periodic spectral grid;
            // the well always runs on its closed-form fields
            return well_works(spec, k, seed, stream_base, diag, None);
        }
    };
    validate_domain(spec, &cfg.grid)?;

    let psi0 = match stratum {
        Stratum::Eigen { n } => eigen_wavefunction(&params, *n, 0.0, cfg.grid)?,
        Stratum::Coherent { eta } => coherent_wavefunction(&params, *eta, 0.0, cfg.grid)?,
        Stratum::Well => unreachable!("handled above"),
    };
    let plan = PropagationPlan::new(
        params.hamiltonian(),
        0.0,
        params.tau,
        cfg.n_steps,
        cfg.snapshot_stride,
    )?;
    let series = propagate(&psi0, &plan)?;
    diag.norm_drift_max = diag.norm_drift_max.max(series.norm_drift_max);
    diag.renorm_count += series.renorm_count;

    let flow = SnapshotFlow::new(&series, &plan.hamiltonian, cfg.scheme)?;
    let density: Vec<f64> = series.states[0].values.iter().map(|v| v.norm_sqr()).collect();
    let ode_dt = cfg.ode_dt.unwrap_or(series.spacing() / 4.0);
    let mut traj_spec = TrajectorySpec::new(k, seed, ode_dt)?;
    traj_spec.record_stride = usize::MAX;
    traj_spec.failure_budget = cfg.failure_budget;
    let sampler = crate::trajectories::GriddedSampler::new(&density, &cfg.grid)?;
    let x0s: Vec<f64> = (0..k)
        .map(|i| {
            let mut rng = uniform_stream(seed, STREAM_X0 | (stream_base + i as u64));
            sampler.quantile(rng.random::<f64>())
        })
        .collect();
    let result = run_ensemble(&traj_spec, &flow, &x0s)?;
    diag.node_collisions += result.node_collisions;
    diag.domain_exits += result.domain_exits;
    diag.work_consistency_max = diag.work_consistency_max.max(result.work_consistency_max);
    Ok(result.trajectories.iter().map(|t| t.work_integral).collect())
}

// ---------------------------------------------------------------------------
// label-resolved coherent estimator for the small-beta regime
// ---------------------------------------------------------------------------

/// <e^{-beta W}> for the thermal coherent mixture with the conditional
/// Gaussian position integral done in closed form per label: given eta the
/// work is affine in x0, W = a(eta) + b(eta) u with u ~ N(0, hbar/2mw), so
/// E_u[e^{-beta W} | eta] = exp(-beta a + beta^2 b^2 hbar / 4 m w).
///
/// Labels are drawn in antithetic pairs and shared across all betas (common
/// random numbers), which makes finite-difference slopes in beta usable at
/// moderate sample counts. Returns (value, stderr) per beta.
pub fn coherent_exp_work_profile(
    params: &OscillatorParams,
    betas: &[f64],
    n_pairs: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    let alpha = params.alpha();
    let (m, w, a_drv, hbar, tau) = (
        params.mass,
        params.omega,
        params.amplitude,
        params.hbar,
        params.tau,
    );
    let wt = w * tau;
    let s2hw_m = (2.0 * hbar * w / m).sqrt();
    let s2hmw3 = (2.0 * hbar * m * w.powi(3)).sqrt();
    let sigma_x_sq = hbar / (2.0 * m * w);

    let a_of = |eta: Complex64| a_drv * tau * (a_drv * tau / (2.0 * m) + s2hw_m * eta.re);
    let b_of = |eta: Complex64| {
        a_drv * (wt * wt.cos() + wt.sin())
            + s2hmw3 * (eta.re * (wt.cos() - 1.0) + eta.im * wt.sin())
    };

    let draws: Vec<(f64, f64)> = (0..n_pairs)
        .map(|i| {
            let mut rng = uniform_stream(seed, STREAM_PROFILE | i as u64);
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            (z1, z2)
        })
        .collect();

    betas
        .iter()
        .map(|&beta| {
            let sigma = coherent_label_sigma(params, beta);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for &(z1, z2) in &draws {
                let dz = Complex64::new(sigma * z1, sigma * z2);
                let pair = [alpha + dz, alpha - dz];
                let g: f64 = pair
                    .iter()
                    .map(|&eta| {
                        let a = a_of(eta);
                        let b = b_of(eta);
                        (-beta * a + beta * beta * b * b * sigma_x_sq / 2.0).exp()
                    })
                    .sum::<f64>()
                    / 2.0;
                sum += g;
                sum_sq += g * g;
            }
            let n = n_pairs as f64;
            let mean = sum / n;
            let var = (sum_sq / n - mean * mean).max(0.0) / n;
            (mean, var.sqrt())
        })
        .collect()
}
