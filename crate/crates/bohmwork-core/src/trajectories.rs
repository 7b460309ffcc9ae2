//! Born-rule sampling of initial positions, RK4 integration of Bohmian
//! trajectories through snapshot series or analytic flow fields, and
//! per-trajectory work accumulation.
//!
//! The work integrand is the full Hamilton-Jacobi power
//!
//!   dH/dt |_(x_t) = -x f1'(t) - p f2'(t) + dV_Q/dt |_(x_t)
//!
//! with p = m (xdot + f2). The quantum-potential rate term cannot be
//! dropped: along a trajectory dE/dt equals the explicit time derivative of
//! the full Hamilton-Jacobi energy, and V_Q(x, t) moves with the packet even
//! when the external drive is off. Dropping it breaks the endpoint identity
//! work = E(x_tau, tau) - E(x_0, 0) by O(x0) per trajectory.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::{
    coherent_local_energy, coherent_quantum_potential_rate, coherent_velocity,
    eigen_local_energy, eigen_quantum_potential_rate, eigen_velocity, OscillatorParams,
    TwoLevelWellState,
};
use crate::error::{BohmError, Result};
use crate::fields::{compute_fields, DerivativeScheme};
use crate::grid::Grid1D;
use crate::hamiltonian::HamiltonianSpec;
use crate::propagator::SnapshotSeries;

/// Default bound on |work_integral - work_endpoint| used by the diagnostics.
pub const WORK_CONSISTENCY_TOL: f64 = 1e-3;

/// Ensemble configuration.
#[derive(Debug, Clone)]
pub struct TrajectorySpec {
    pub n_samples: usize,
    pub rng_seed: u64,
    pub ode_dt: f64,
    pub record_stride: usize,
    pub work_consistency_tol: f64,
    /// Number of tolerated trajectory failures before the run aborts.
    pub failure_budget: usize,
}

impl TrajectorySpec {
    pub fn new(n_samples: usize, rng_seed: u64, ode_dt: f64) -> Result<Self> {
        if n_samples < 1 {
            return Err(BohmError::InvalidParameter("n_samples must be >= 1".into()));
        }
        if !(ode_dt > 0.0) {
            return Err(BohmError::InvalidParameter("ode_dt must be positive".into()));
        }
        Ok(TrajectorySpec {
            n_samples,
            rng_seed,
            ode_dt,
            record_stride: 64,
            work_consistency_tol: WORK_CONSISTENCY_TOL,
            failure_budget: 0,
        })
    }
}

/// One integrated trajectory with its recorded history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub x0: f64,
    pub weight: f64,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub energies: Vec<f64>,
    pub work_partial: Vec<f64>,
    /// Power integrated over the protocol.
    pub work_integral: f64,
    /// E(x_end, t_end) - E(x0, t_start).
    pub work_endpoint: f64,
}

impl Trajectory {
    pub fn consistency_gap(&self) -> f64 {
        (self.work_integral - self.work_endpoint).abs()
    }
}

/// A velocity / energy / power field trajectories can be driven through.
pub trait FlowField: Sync {
    fn t_start(&self) -> f64;
    fn t_end(&self) -> f64;
    fn velocity(&self, x: f64, t: f64) -> Result<f64>;
    fn local_energy(&self, x: f64, t: f64) -> Result<f64>;
    /// Full Hamilton-Jacobi power dH/dt at fixed (x, t).
    fn power(&self, x: f64, t: f64) -> Result<f64>;
}

// ---------------------------------------------------------------------------
// initial-position sampling
// ---------------------------------------------------------------------------

/// Inverse-CDF sampler over a gridded density, treating the density as
/// piecewise constant per cell (piecewise-linear CDF). The cumulative table
/// is built once; draws are a binary search.
pub struct GriddedSampler {
    grid: Grid1D,
    cdf: Vec<f64>,
}

impl GriddedSampler {
    pub fn new(density: &[f64], grid: &Grid1D) -> Result<Self> {
        let dx = grid.dx();
        let mut cdf = Vec::with_capacity(density.len() + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for &rho in density {
            acc += rho * dx;
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(BohmError::ZeroDensity);
        }
        for v in &mut cdf {
            *v /= acc;
        }
        Ok(GriddedSampler { grid: *grid, cdf })
    }

    /// Position at quantile u.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        // index of the first cdf entry above u
        let mut lo = 0usize;
        let mut hi = self.cdf.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf[mid] <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let cell = self.cdf[hi] - self.cdf[lo];
        let frac = if cell > 0.0 { (u - self.cdf[lo]) / cell } else { 0.0 };
        self.grid.x(lo) + frac * self.grid.dx()
    }
}

/// Deterministic inverse-CDF draw from a gridded density at quantile u.
pub fn inverse_cdf(density: &[f64], grid: &Grid1D, u: f64) -> Result<f64> {
    Ok(GriddedSampler::new(density, grid)?.quantile(u))
}

/// Draw n initial positions from the gridded density, one RNG stream per
/// sample index so results are reproducible under any execution order.
pub fn sample_initial_positions(
    density: &[f64],
    grid: &Grid1D,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = GriddedSampler::new(density, grid)?;
    Ok((0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sampler.quantile(rng.random::<f64>())
        })
        .collect())
}

// ---------------------------------------------------------------------------
// snapshot-backed flow field
// ---------------------------------------------------------------------------

/// Flow field interpolated from a propagated snapshot series: cubic in x,
/// linear in t, with the quantum-potential rate taken from the finite
/// difference of adjacent snapshots.
pub struct SnapshotFlow {
    grid: Grid1D,
    hamiltonian: HamiltonianSpec,
    times: Vec<f64>,
    velocity: Vec<Vec<f64>>,
    energy: Vec<Vec<f64>>,
    quantum_potential: Vec<Vec<f64>>,
}

impl SnapshotFlow {
    pub fn new(
        series: &SnapshotSeries,
        h: &HamiltonianSpec,
        scheme: DerivativeScheme,
    ) -> Result<Self> {
        let grid = series.states[0].grid;
        let fields: Vec<_> = series
            .states
            .par_iter()
            .zip(&series.times)
            .map(|(psi, &t)| compute_fields(psi, h, t, scheme))
            .collect::<Result<Vec<_>>>()?;
        let mut velocity = Vec::with_capacity(fields.len());
        let mut energy = Vec::with_capacity(fields.len());
        let mut quantum_potential = Vec::with_capacity(fields.len());
        for f in fields {
            velocity.push(f.velocity);
            energy.push(f.local_energy);
            quantum_potential.push(f.quantum_potential);
        }
        Ok(SnapshotFlow {
            grid,
            hamiltonian: h.clone(),
            times: series.times.clone(),
            velocity,
            energy,
            quantum_potential,
        })
    }

    fn locate_time(&self, t: f64) -> (usize, f64) {
        let t0 = self.times[0];
        let dt = self.times[1] - self.times[0];
        let idx = (((t - t0) / dt).floor() as isize)
            .clamp(0, self.times.len() as isize - 2) as usize;
        let frac = ((t - self.times[idx]) / dt).clamp(0.0, 1.0);
        (idx, frac)
    }

    /// Catmull-Rom interpolation of one field array at x; NaN sentinels in
    /// the stencil surface as node collisions.
    fn interp(&self, field: &[f64], x: f64) -> Result<f64> {
        let dx = self.grid.dx();
        let pos = (x - self.grid.x_min) / dx;
        let j = pos.floor() as isize;
        if j < 1 || j as usize + 2 >= self.grid.n_points {
            return Err(BohmError::DomainExit { sample: 0, x, t: f64::NAN });
        }
        let j = j as usize;
        let u = pos - j as f64;
        let p0 = field[j - 1];
        let p1 = field[j];
        let p2 = field[j + 1];
        let p3 = field[j + 2];
        let value = 0.5
            * (2.0 * p1
                + (-p0 + p2) * u
                + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u
                + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(BohmError::NodeCollision { sample: 0, x, t: f64::NAN })
        }
    }

    fn lerp_field(&self, fields: &[Vec<f64>], x: f64, t: f64) -> Result<f64> {
        let (idx, frac) = self.locate_time(t);
        let a = self.interp(&fields[idx], x)?;
        let b = self.interp(&fields[idx + 1], x)?;
        Ok((1.0 - frac) * a + frac * b)
    }

    /// Finite-difference rate of a snapshot interval, exact at its midpoint.
    fn interval_rate(&self, idx: usize, x: f64) -> Result<f64> {
        let dt = self.times[idx + 1] - self.times[idx];
        let a = self.interp(&self.quantum_potential[idx], x)?;
        let b = self.interp(&self.quantum_potential[idx + 1], x)?;
        Ok((b - a) / dt)
    }

    /// dV_Q/dt at fixed x, linearly interpolated between the midpoints of
    /// adjacent snapshot intervals so the estimate stays second order in the
    /// snapshot spacing everywhere, not just at interval midpoints.
    fn quantum_potential_rate(&self, x: f64, t: f64) -> Result<f64> {
        let (idx, frac) = self.locate_time(t);
        let last = self.times.len() - 2;
        if frac < 0.5 {
            if idx == 0 {
                self.interval_rate(0, x)
            } else {
                let lo = self.interval_rate(idx - 1, x)?;
                let hi = self.interval_rate(idx, x)?;
                Ok(lo + (frac + 0.5) * (hi - lo))
            }
        } else if idx == last {
            self.interval_rate(last, x)
        } else {
            let lo = self.interval_rate(idx, x)?;
            let hi = self.interval_rate(idx + 1, x)?;
            Ok(lo + (frac - 0.5) * (hi - lo))
        }
    }
}

impl FlowField for SnapshotFlow {
    fn t_start(&self) -> f64 {
        self.times[0]
    }

    fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn velocity(&self, x: f64, t: f64) -> Result<f64> {
        self.lerp_field(&self.velocity, x, t)
    }

    fn local_energy(&self, x: f64, t: f64) -> Result<f64> {
        self.lerp_field(&self.energy, x, t)
    }

    fn power(&self, x: f64, t: f64) -> Result<f64> {
        let h = &self.hamiltonian;
        let v = self.velocity(x, t)?;
        let p = h.mass * (v + h.f2(t));
        Ok(-x * h.df1(t) - p * h.df2(t) + self.quantum_potential_rate(x, t)?)
    }
}

// ---------------------------------------------------------------------------
// analytic flow fields
// ---------------------------------------------------------------------------

/// Closed-form flow sources for the scenarios with exact solutions.
pub enum AnalyticFlow {
    DrivenEigenstate { params: OscillatorParams, n: usize },
    Coherent { params: OscillatorParams, eta: Complex64 },
    TwoLevelWell { state: TwoLevelWellState, t_end: f64 },
}

impl AnalyticFlow {
    fn well_density_floor(state: &TwoLevelWellState) -> f64 {
        2.0 / state.width * 1e-12
    }
}

impl FlowField for AnalyticFlow {
    fn t_start(&self) -> f64 {
        0.0
    }

    fn t_end(&self) -> f64 {
        match self {
            AnalyticFlow::DrivenEigenstate { params, .. } => params.tau,
            AnalyticFlow::Coherent { params, .. } => params.tau,
            AnalyticFlow::TwoLevelWell { t_end, .. } => *t_end,
        }
    }

    fn velocity(&self, x: f64, t: f64) -> Result<f64> {
        match self {
            AnalyticFlow::DrivenEigenstate { params, .. } => Ok(eigen_velocity(params, t)),
            AnalyticFlow::Coherent { params, eta } => Ok(coherent_velocity(params, *eta, t)),
            AnalyticFlow::TwoLevelWell { state, .. } => {
                if x <= 0.0 || x >= state.width {
                    return Err(BohmError::DomainExit { sample: 0, x, t });
                }
                if state.value(x, t).norm_sqr() < Self::well_density_floor(state) {
                    return Err(BohmError::NodeCollision { sample: 0, x, t });
                }
                Ok(state.velocity(x, t))
            }
        }
    }

    fn local_energy(&self, x: f64, t: f64) -> Result<f64> {
        match self {
            AnalyticFlow::DrivenEigenstate { params, n } => {
                Ok(eigen_local_energy(params, *n, x, t))
            }
            AnalyticFlow::Coherent { params, eta } => Ok(coherent_local_energy(params, *eta, x, t)),
            AnalyticFlow::TwoLevelWell { state, .. } => {
                if x <= 0.0 || x >= state.width {
                    return Err(BohmError::DomainExit { sample: 0, x, t });
                }
                if state.value(x, t).norm_sqr() < Self::well_density_floor(state) {
                    return Err(BohmError::NodeCollision { sample: 0, x, t });
                }
                Ok(state.local_energy(x, t))
            }
        }
    }

    fn power(&self, x: f64, t: f64) -> Result<f64> {
        match self {
            AnalyticFlow::DrivenEigenstate { params, .. } => {
                let h = params.hamiltonian();
                let p = params.momentum(t);
                Ok(-x * h.df1(t) - p * h.df2(t) + eigen_quantum_potential_rate(params, x, t))
            }
            AnalyticFlow::Coherent { params, eta } => {
                let h = params.hamiltonian();
                let p = crate::analytic::coherent_momentum(params, *eta, t);
                Ok(-x * h.df1(t) - p * h.df2(t)
                    + coherent_quantum_potential_rate(params, *eta, x, t))
            }
            AnalyticFlow::TwoLevelWell { state, .. } => {
                if x <= 0.0 || x >= state.width {
                    return Err(BohmError::DomainExit { sample: 0, x, t });
                }
                if state.value(x, t).norm_sqr() < Self::well_density_floor(state) {
                    return Err(BohmError::NodeCollision { sample: 0, x, t });
                }
                Ok(state.quantum_potential_rate(x, t))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// integration
// ---------------------------------------------------------------------------

/// RK4 integration of xdot = v(x, t) with Simpson accumulation of the power
/// along the way. Local energies are recorded every `record_stride` steps.
pub fn integrate_trajectory(
    x0: f64,
    flow: &dyn FlowField,
    ode_dt: f64,
    record_stride: usize,
) -> Result<Trajectory> {
    let t0 = flow.t_start();
    let t1 = flow.t_end();
    let span = t1 - t0;
    let n_steps = ((span / ode_dt).round() as usize).max(1);
    let h = span / n_steps as f64;
    let stride = record_stride.max(1);

    let e0 = flow.local_energy(x0, t0)?;
    let mut x = x0;
    let mut work = 0.0;
    let mut times = vec![t0];
    let mut positions = vec![x0];
    let mut energies = vec![e0];
    let mut work_partial = vec![0.0];

    for step in 0..n_steps {
        let t = t0 + step as f64 * h;
        let k1 = flow.velocity(x, t)?;
        let k2 = flow.velocity(x + 0.5 * h * k1, t + 0.5 * h)?;
        let k3 = flow.velocity(x + 0.5 * h * k2, t + 0.5 * h)?;
        let k4 = flow.velocity(x + h * k3, t + h)?;
        let x_next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        // third-order midpoint estimate keeps Simpson at fourth order
        let x_mid = x + 0.25 * h * (k1 + k2);

        let p_a = flow.power(x, t)?;
        let p_m = flow.power(x_mid, t + 0.5 * h)?;
        let p_b = flow.power(x_next, t + h)?;
        work += h / 6.0 * (p_a + 4.0 * p_m + p_b);

        x = x_next;
        if (step + 1) % stride == 0 || step + 1 == n_steps {
            let tt = t0 + (step + 1) as f64 * h;
            times.push(tt);
            positions.push(x);
            energies.push(flow.local_energy(x, tt)?);
            work_partial.push(work);
        }
    }

    let e1 = *energies.last().unwrap();
    Ok(Trajectory {
        x0,
        weight: 1.0,
        times,
        positions,
        energies,
        work_partial,
        work_integral: work,
        work_endpoint: e1 - e0,
    })
}

/// Ensemble run summary.
#[derive(Debug)]
pub struct EnsembleResult {
    pub trajectories: Vec<Trajectory>,
    pub node_collisions: usize,
    pub domain_exits: usize,
    pub work_consistency_max: f64,
}

/// Integrate an ensemble from pre-sampled (or freshly sampled) initial
/// positions. Members run in parallel; results are collected by sample
/// index, so output is identical under any schedule.
pub fn run_ensemble(
    spec: &TrajectorySpec,
    flow: &dyn FlowField,
    x0s: &[f64],
) -> Result<EnsembleResult> {
    let results: Vec<(usize, Result<Trajectory>)> = x0s
        .par_iter()
        .enumerate()
        .map(|(i, &x0)| {
            (
                i,
                integrate_trajectory(x0, flow, spec.ode_dt, spec.record_stride)
                    .map_err(|e| e.with_sample(i)),
            )
        })
        .collect();

    let mut trajectories = Vec::with_capacity(x0s.len());
    let mut node_collisions = 0;
    let mut domain_exits = 0;
    let mut first_error: Option<BohmError> = None;
    let mut failures = 0;
    for (_, r) in results {
        match r {
            Ok(traj) => trajectories.push(traj),
            Err(e) => {
                failures += 1;
                match &e {
                    BohmError::NodeCollision { .. } => node_collisions += 1,
                    BohmError::DomainExit { .. } => domain_exits += 1,
                    _ => {}
                }
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    if failures > spec.failure_budget {
        return Err(BohmError::FailureBudgetExceeded {
            failures,
            budget: spec.failure_budget,
            first: Box::new(first_error.expect("failures imply an error")),
        });
    }
    let work_consistency_max = trajectories
        .iter()
        .map(Trajectory::consistency_gap)
        .fold(0.0, f64::max);
    Ok(EnsembleResult { trajectories, node_collisions, domain_exits, work_consistency_max })
}
