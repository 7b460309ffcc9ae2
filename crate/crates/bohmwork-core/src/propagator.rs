//! Split-operator time evolution: half-step of the momentum-diagonal part in
//! k-space, full step of the position-diagonal part, half-step momentum
//! again, with the drives sampled at the step midpoint. Each factor is a
//! diagonal unitary, so the norm is preserved to rounding.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{BohmError, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::spectral::SpectralOps;
use crate::wavefunction::WaveFunction;

/// Renormalize a snapshot only when its norm drifts beyond this.
pub const NORM_DRIFT_TOL: f64 = 1e-10;

/// Time discretization of the evolution plus snapshot cadence.
#[derive(Debug, Clone)]
pub struct PropagationPlan {
    pub hamiltonian: HamiltonianSpec,
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
    pub snapshot_stride: usize,
}

impl PropagationPlan {
    pub fn new(
        hamiltonian: HamiltonianSpec,
        t_start: f64,
        t_end: f64,
        n_steps: usize,
        snapshot_stride: usize,
    ) -> Result<Self> {
        if n_steps < 1 {
            return Err(BohmError::InvalidPlan("n_steps must be >= 1".into()));
        }
        if !(t_end > t_start) {
            return Err(BohmError::InvalidPlan(format!(
                "need t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        if snapshot_stride == 0 || n_steps % snapshot_stride != 0 {
            return Err(BohmError::InvalidPlan(format!(
                "snapshot_stride {snapshot_stride} must divide n_steps {n_steps}"
            )));
        }
        let plan = PropagationPlan { hamiltonian, t_start, t_end, n_steps, snapshot_stride };
        let dt = plan.dt();
        let max = plan.max_dt();
        if dt > max {
            return Err(BohmError::StepTooLarge { dt, max_dt: max });
        }
        Ok(plan)
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    /// Step bound 0.05 / w_max from the Hamiltonian's characteristic
    /// frequency; scale-free Hamiltonians fall back to the protocol span.
    pub fn max_dt(&self) -> f64 {
        self.hamiltonian
            .max_step()
            .unwrap_or(0.05 * (self.t_end - self.t_start))
    }
}

/// Evenly spaced snapshots of the evolving state, endpoints included.
#[derive(Debug, Clone)]
pub struct SnapshotSeries {
    pub times: Vec<f64>,
    pub states: Vec<WaveFunction>,
    /// Largest |norm^2 - 1| observed before any renormalization.
    pub norm_drift_max: f64,
    /// Number of snapshots that needed renormalization.
    pub renorm_count: usize,
}

impl SnapshotSeries {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// Binary dump: one JSON header line {grid, times}, then for every
    /// snapshot node-ordered little-endian f64 pairs (re, im).
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        let grid = self.states[0].grid;
        let times: Vec<String> = self.times.iter().map(|t| format!("{t}")).collect();
        writeln!(
            w,
            "{{\"grid\":{{\"x_min\":{},\"x_max\":{},\"n_points\":{}}},\"times\":[{}]}}",
            grid.x_min,
            grid.x_max,
            grid.n_points,
            times.join(",")
        )?;
        for state in &self.states {
            for v in &state.values {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// One Strang step of size dt starting at time t. Drives are evaluated at
/// t + dt/2 in all three factors.
pub fn step(psi: &WaveFunction, h: &HamiltonianSpec, t: f64, dt: f64) -> Result<WaveFunction> {
    if let Some(max_dt) = h.max_step() {
        if dt > max_dt {
            return Err(BohmError::StepTooLarge { dt, max_dt });
        }
    }
    let ops = SpectralOps::new(psi.grid);
    let mut state = psi.clone();
    step_in_place(&mut state, h, t, dt, &ops)?;
    Ok(state)
}

fn step_in_place(
    psi: &mut WaveFunction,
    h: &HamiltonianSpec,
    t: f64,
    dt: f64,
    ops: &SpectralOps,
) -> Result<()> {
    let t_mid = t + 0.5 * dt;
    let f2 = h.f2(t_mid);
    let kin = h.hbar / (2.0 * h.mass);

    // half momentum: exp(-i dt/2 (hbar k^2 / 2m - k f2))
    ops.forward(&mut psi.values);
    for (v, &k) in psi.values.iter_mut().zip(ops.wavenumbers()) {
        let phase = -0.5 * dt * (kin * k * k - k * f2);
        *v *= Complex64::from_polar(1.0, phase);
    }
    ops.inverse(&mut psi.values);

    // full position: exp(-i dt (V(x) - x f1) / hbar)
    for i in 0..psi.values.len() {
        let phase = -dt * h.potential_with_drive(&psi.grid, i, t_mid) / h.hbar;
        psi.values[i] *= Complex64::from_polar(1.0, phase);
    }

    // half momentum again
    ops.forward(&mut psi.values);
    for (v, &k) in psi.values.iter_mut().zip(ops.wavenumbers()) {
        let phase = -0.5 * dt * (kin * k * k - k * f2);
        *v *= Complex64::from_polar(1.0, phase);
    }
    ops.inverse(&mut psi.values);

    psi.time = t + dt;
    Ok(())
}

/// Run the full plan, recording every `snapshot_stride`-th state including
/// both endpoints.
pub fn propagate(psi0: &WaveFunction, plan: &PropagationPlan) -> Result<SnapshotSeries> {
    psi0.check_normalized()?;
    if (psi0.time - plan.t_start).abs() > 1e-12 {
        return Err(BohmError::InvalidPlan(format!(
            "initial state time {} does not match plan start {}",
            psi0.time, plan.t_start
        )));
    }
    let ops = SpectralOps::new(psi0.grid);
    let dt = plan.dt();
    let n_snapshots = plan.n_steps / plan.snapshot_stride + 1;

    let mut state = psi0.clone();
    let mut times = Vec::with_capacity(n_snapshots);
    let mut states = Vec::with_capacity(n_snapshots);
    let mut norm_drift_max: f64 = 0.0;
    let mut renorm_count = 0;

    let record = |state: &WaveFunction, drift_max: &mut f64, renorms: &mut usize| {
        let mut snap = state.clone();
        let drift = (snap.norm_sq() - 1.0).abs();
        *drift_max = drift_max.max(drift);
        if drift > NORM_DRIFT_TOL {
            snap.normalize().expect("propagated state cannot be zero");
            *renorms += 1;
        }
        snap
    };

    times.push(plan.t_start);
    states.push(record(&state, &mut norm_drift_max, &mut renorm_count));

    for step_idx in 0..plan.n_steps {
        let t = plan.t_start + step_idx as f64 * dt;
        step_in_place(&mut state, &plan.hamiltonian, t, dt, &ops)?;
        if (step_idx + 1) % plan.snapshot_stride == 0 {
            // stamp the exact nominal time to avoid accumulation drift
            state.time = plan.t_start + (step_idx + 1) as f64 * dt;
            times.push(state.time);
            states.push(record(&state, &mut norm_drift_max, &mut renorm_count));
        }
    }

    Ok(SnapshotSeries { times, states, norm_drift_max, renorm_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{eigen_wavefunction, OscillatorParams};
    use crate::grid::Grid1D;
    use crate::hamiltonian::{Drive, Potential};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn params() -> OscillatorParams {
        OscillatorParams::new(1.0, 1.0, 1.0, 1.0, PI).unwrap()
    }

    fn grid() -> Grid1D {
        Grid1D::new(-12.0, 12.0, 1024).unwrap()
    }

    #[test]
    fn stationary_state_density_is_preserved() {
        let undriven = OscillatorParams::new(1.0, 1.0, 0.0, 1.0, PI).unwrap();
        let psi0 = eigen_wavefunction(&undriven, 0, 0.0, grid()).unwrap();
        let plan =
            PropagationPlan::new(undriven.hamiltonian(), 0.0, PI, 16384, 4096).unwrap();
        let series = propagate(&psi0, &plan).unwrap();
        for snap in &series.states {
            for (a, b) in snap.values.iter().zip(&psi0.values) {
                assert!(
                    (a.norm_sqr() - b.norm_sqr()).abs() < 1e-8,
                    "density drift {}",
                    (a.norm_sqr() - b.norm_sqr()).abs()
                );
            }
        }
    }

    #[test]
    fn free_packet_norm_is_preserved_over_many_steps() {
        let g = grid();
        let psi0 = WaveFunction::from_fn(g, 0.0, |x| {
            Complex64::from_polar((-0.5 * x * x).exp(), 1.5 * x)
        })
        .unwrap();
        let h = HamiltonianSpec::new(1.0, 1.0, Potential::Free, Drive::None).unwrap();
        let plan = PropagationPlan::new(h, 0.0, 1.0, 1000, 1000).unwrap();
        let series = propagate(&psi0, &plan).unwrap();
        let last = series.states.last().unwrap();
        assert_relative_eq!(last.norm_sq(), 1.0, epsilon = 1e-10);
        assert!(series.norm_drift_max < 1e-10);
    }

    #[test]
    fn driven_eigenstate_matches_displaced_number_state() {
        let p = params();
        for n in [0usize, 2] {
            let psi0 = eigen_wavefunction(&p, n, 0.0, grid()).unwrap();
            let plan = PropagationPlan::new(p.hamiltonian(), 0.0, p.tau, 2048, 2048).unwrap();
            let series = propagate(&psi0, &plan).unwrap();
            let end = series.states.last().unwrap();
            let exact = eigen_wavefunction(&p, n, p.tau, grid()).unwrap();
            let fid = end.fidelity(&exact);
            assert!(fid >= 1.0 - 1e-6, "n = {n}: fidelity {fid}");
        }
    }

    #[test]
    fn driven_fidelity_holds_at_every_snapshot() {
        let p = params();
        let psi0 = eigen_wavefunction(&p, 1, 0.0, grid()).unwrap();
        let plan = PropagationPlan::new(p.hamiltonian(), 0.0, p.tau, 2048, 256).unwrap();
        let series = propagate(&psi0, &plan).unwrap();
        for (t, snap) in series.times.iter().zip(&series.states) {
            let exact = eigen_wavefunction(&p, 1, *t, grid()).unwrap();
            assert!(snap.fidelity(&exact) >= 1.0 - 1e-6, "t = {t}");
        }
    }

    #[test]
    fn energy_gain_matches_closed_form() {
        let p = params();
        let psi0 = eigen_wavefunction(&p, 1, 0.0, grid()).unwrap();
        let plan = PropagationPlan::new(p.hamiltonian(), 0.0, p.tau, 4096, 4096).unwrap();
        let series = propagate(&psi0, &plan).unwrap();
        let ops = SpectralOps::new(grid());
        let h = p.hamiltonian();
        let e0 = ops.energy_expectation(&series.states[0], &h, 0.0);
        let e1 = ops.energy_expectation(series.states.last().unwrap(), &h, p.tau);
        assert_relative_eq!(e1 - e0, (p.amplitude * p.tau).powi(2) / (2.0 * p.mass),
            epsilon = 1e-5);
    }

    #[test]
    fn second_order_convergence_in_dt() {
        let p = params();
        let psi0 = eigen_wavefunction(&p, 0, 0.0, grid()).unwrap();
        let exact = eigen_wavefunction(&p, 0, p.tau, grid()).unwrap();
        let err = |n_steps: usize| -> f64 {
            let plan = PropagationPlan::new(p.hamiltonian(), 0.0, p.tau, n_steps, n_steps).unwrap();
            let series = propagate(&psi0, &plan).unwrap();
            let end = series.states.last().unwrap();
            // phase-aligned L2 distance
            let overlap = exact.inner(end);
            let phase = overlap / overlap.norm();
            let dx = grid().dx();
            end.values
                .iter()
                .zip(&exact.values)
                .map(|(a, b)| (a - b * phase).norm_sqr())
                .sum::<f64>()
                .sqrt()
                * dx.sqrt()
        };
        let e1 = err(512);
        let e2 = err(1024);
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "convergence ratio {ratio}");
    }

    #[test]
    fn plan_validation() {
        let p = params();
        assert!(PropagationPlan::new(p.hamiltonian(), 0.0, PI, 0, 1).is_err());
        assert!(PropagationPlan::new(p.hamiltonian(), 0.0, PI, 100, 3).is_err());
        assert!(PropagationPlan::new(p.hamiltonian(), PI, 0.0, 100, 1).is_err());
        // dt above the bound: one giant step over the protocol
        let err = PropagationPlan::new(p.hamiltonian(), 0.0, PI, 1, 1);
        assert!(matches!(err, Err(BohmError::StepTooLarge { .. })));
    }

    #[test]
    fn single_step_rejects_oversized_dt() {
        let p = params();
        let psi0 = eigen_wavefunction(&p, 0, 0.0, grid()).unwrap();
        let err = step(&psi0, &p.hamiltonian(), 0.0, 1.0);
        assert!(matches!(err, Err(BohmError::StepTooLarge { .. })));
        assert!(step(&psi0, &p.hamiltonian(), 0.0, 0.01).is_ok());
    }

    #[test]
    fn single_step_plan_records_both_endpoints() {
        let p = OscillatorParams::new(1.0, 1.0, 0.0, 1.0, 0.02).unwrap();
        let psi0 = eigen_wavefunction(&p, 0, 0.0, grid()).unwrap();
        let plan = PropagationPlan::new(p.hamiltonian(), 0.0, 0.02, 1, 1).unwrap();
        let series = propagate(&psi0, &plan).unwrap();
        assert_eq!(series.len(), 2);
        assert_relative_eq!(series.times[0], 0.0);
        assert_relative_eq!(series.times[1], 0.02);
        let direct = step(&psi0, &p.hamiltonian(), 0.0, 0.02).unwrap();
        for (a, b) in series.states[1].values.iter().zip(&direct.values) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn dump_round_trips_header_and_payload() {
        let p = OscillatorParams::new(1.0, 1.0, 0.0, 1.0, 0.1).unwrap();
        let psi0 = eigen_wavefunction(&p, 0, 0.0, Grid1D::new(-8.0, 8.0, 64).unwrap()).unwrap();
        let plan = PropagationPlan::new(p.hamiltonian(), 0.0, 0.1, 4, 2).unwrap();
        let series = propagate(&psi0, &plan).unwrap();
        let mut buf = Vec::new();
        series.write_dump(&mut buf).unwrap();
        let newline = buf.iter().position(|&b| b == b'\n').unwrap();
        let header: serde_json::Value = serde_json::from_slice(&buf[..newline]).unwrap();
        assert_eq!(header["grid"]["n_points"], 64);
        assert_eq!(header["times"].as_array().unwrap().len(), 3);
        let payload = &buf[newline + 1..];
        assert_eq!(payload.len(), 3 * 64 * 16);
        let re0 = f64::from_le_bytes(payload[0..8].try_into().unwrap());
        assert_relative_eq!(re0, series.states[0].values[0].re);
    }
}
