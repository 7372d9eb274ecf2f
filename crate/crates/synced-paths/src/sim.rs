//! Closed-loop simulation: the synced controller driving a plant cascade.
//!
//! Controller and plant states are integrated jointly with one fixed-step
//! RK4, so no artificial one-sample delay separates them. Gates are sampled
//! at the start of each step and held across its stages; scenario validation
//! has already pinned every switch instant onto the step grid, so a step
//! never straddles a switch. Runs are pure functions of the scenario: the
//! same scenario produces the same trace, bit for bit.

use crate::error::{Error, Result};
use crate::gating::{gates_at, GateSchedule};
use crate::lti::{Rk4, StateSpace};
use crate::scenario::Scenario;
use crate::sync::{ControlPath, SyncedController};
use crate::trace::Trace;

/// A chain of SISO stages: the first is driven by the control signal, each
/// later one by its predecessor's output.
#[derive(Clone, Debug)]
pub struct PlantCascade {
    stages: Vec<StateSpace>,
    offsets: Vec<usize>,
    dim: usize,
}

impl PlantCascade {
    pub fn new(stages: Vec<StateSpace>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Config("at least one plant stage is required".into()));
        }
        let mut offsets = Vec::with_capacity(stages.len());
        let mut dim = 0;
        for stage in &stages {
            offsets.push(dim);
            dim += stage.n;
        }
        Ok(PlantCascade {
            stages,
            offsets,
            dim,
        })
    }

    pub fn stages(&self) -> &[StateSpace] {
        &self.stages
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state_offset(&self, stage: usize) -> usize {
        self.offsets[stage]
    }

    /// Stage outputs as affine functions of the control signal:
    /// y_j = alphas[j] + betas[j] * y_c. Feedthrough chains multiply up, so
    /// beta is zero from the first strictly proper stage onward. This lets
    /// the controller read its measurements before y_c exists.
    pub fn affine_outputs(&self, states: &[f64], alphas: &mut [f64], betas: &mut [f64]) {
        let mut alpha_prev = 0.0;
        let mut beta_prev = 1.0;
        for (j, stage) in self.stages.iter().enumerate() {
            let x = &states[self.offsets[j]..self.offsets[j] + stage.n];
            let cx: f64 = stage.c.iter().zip(x).map(|(ci, xi)| ci * xi).sum();
            alphas[j] = cx + stage.d * alpha_prev;
            betas[j] = stage.d * beta_prev;
            alpha_prev = alphas[j];
            beta_prev = betas[j];
        }
    }

    /// Writes the cascade state derivatives for a known control signal.
    pub fn derivatives_into(&self, states: &[f64], y_c: f64, dstates: &mut [f64]) {
        let mut input = y_c;
        for (j, stage) in self.stages.iter().enumerate() {
            let x = &states[self.offsets[j]..self.offsets[j] + stage.n];
            let dx = &mut dstates[self.offsets[j]..self.offsets[j] + stage.n];
            stage.derivative(x, input, dx);
            input = stage.output(x, input);
        }
    }
}

/// A ready-to-run closed loop built from a scenario.
#[derive(Clone, Debug)]
pub struct ClosedLoopSim {
    controller: SyncedController,
    plants: PlantCascade,
    w_gate: GateSchedule,
    u_gate: GateSchedule,
    dt: f64,
    n_steps: usize,
    record_stride: usize,
    initial_state: Vec<f64>,
}

impl ClosedLoopSim {
    /// Builds the loop. With `sync_enabled` false the sync gate is forced
    /// off, freezing every background path while leaving the switching
    /// schedule untouched.
    pub fn new(scenario: &Scenario, sync_enabled: bool) -> Result<Self> {
        scenario.validate()?;
        let mut paths = Vec::with_capacity(scenario.paths.len());
        for spec in &scenario.paths {
            paths.push(ControlPath::new(&spec.path_config()?)?);
        }
        let controller = SyncedController::new(paths)?;
        let mut stages = Vec::with_capacity(scenario.plants.len());
        for spec in &scenario.plants {
            stages.push(spec.transfer_function()?.realize());
        }
        let plants = PlantCascade::new(stages)?;

        let ctrl_dim = controller.dim();
        let mut initial_state = vec![0.0; ctrl_dim + plants.dim()];
        for (i, spec) in scenario.paths.iter().enumerate() {
            if let Some(init) = &spec.initial {
                let off = controller.state_offset(i);
                initial_state[off..off + init.len()].copy_from_slice(init);
            }
        }
        for (j, spec) in scenario.plants.iter().enumerate() {
            if let Some(init) = &spec.initial {
                let off = ctrl_dim + plants.state_offset(j);
                initial_state[off..off + init.len()].copy_from_slice(init);
            }
        }

        Ok(ClosedLoopSim {
            controller,
            plants,
            w_gate: scenario.w_gate,
            u_gate: if sync_enabled {
                scenario.u_gate
            } else {
                scenario.u_gate.disabled()
            },
            dt: scenario.sim.dt,
            n_steps: scenario.n_steps(),
            record_stride: scenario.sim.record_stride,
            initial_state,
        })
    }

    pub fn controller(&self) -> &SyncedController {
        &self.controller
    }

    pub fn plants(&self) -> &PlantCascade {
        &self.plants
    }

    /// Human-readable trace column for a flat state index, used to report
    /// where a run blew up.
    fn column_for_state(&self, idx: usize) -> String {
        let ctrl_dim = self.controller.dim();
        if idx < ctrl_dim {
            for i in (0..self.controller.paths().len()).rev() {
                if idx >= self.controller.state_offset(i) {
                    return format!("x_c{}", i + 1);
                }
            }
            return "x_c1".into();
        }
        let plant_idx = idx - ctrl_dim;
        for j in (0..self.plants.stages().len()).rev() {
            if plant_idx >= self.plants.state_offset(j) {
                return format!("y{}", j + 1);
            }
        }
        "y1".into()
    }

    /// Runs the closed loop and returns the recorded trace.
    ///
    /// Rows are recorded every `record_stride` steps, each before the state
    /// advances, so a row at a switch instant already reflects the new gate
    /// values. A non-finite state aborts the run with the offending column.
    pub fn run(&self) -> Result<Trace> {
        let ctrl_dim = self.controller.dim();
        let n_paths = self.controller.paths().len();
        let n_stages = self.plants.stages().len();
        let mut state = self.initial_state.clone();
        let mut rk4 = Rk4::new(state.len());
        let mut trace =
            Trace::with_capacity(n_paths, n_stages, self.n_steps / self.record_stride + 1);
        let mut outputs = vec![0.0; n_paths];
        let mut sync_errors = vec![0.0; n_paths];
        let mut alphas = vec![0.0; n_stages];
        let mut betas = vec![0.0; n_stages];

        for step in 0..=self.n_steps {
            let t = step as f64 * self.dt;
            let gates = gates_at(&self.w_gate, &self.u_gate, t);
            if step % self.record_stride == 0 {
                let (cx, px) = state.split_at(ctrl_dim);
                self.plants.affine_outputs(px, &mut alphas, &mut betas);
                let (_, y_c) = self.controller.resolve_into(
                    cx,
                    &gates,
                    &alphas,
                    &mut outputs,
                    &mut sync_errors,
                );
                trace.times.push(t);
                trace.y_c.push(y_c);
                for i in 0..n_paths {
                    trace.x_c[i].push(outputs[i]);
                    trace.e[i].push(sync_errors[i]);
                }
                for j in 0..n_stages {
                    trace.y[j].push(alphas[j] + betas[j] * y_c);
                }
                trace.w.push(gates.w);
                trace.u.push(gates.u);
            }
            if step == self.n_steps {
                break;
            }
            let controller = &self.controller;
            let plants = &self.plants;
            rk4.step(&mut state, t, self.dt, |_, x, dx| {
                let (cx, px) = x.split_at(ctrl_dim);
                let (dcx, dpx) = dx.split_at_mut(ctrl_dim);
                plants.affine_outputs(px, &mut alphas, &mut betas);
                let (active, y_c) =
                    controller.resolve_into(cx, &gates, &alphas, &mut outputs, &mut sync_errors);
                controller.derivatives_into(cx, active, &alphas, &sync_errors, dcx);
                plants.derivatives_into(px, y_c, dpx);
            });
            if let Some(idx) = state.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    t: (step + 1) as f64 * self.dt,
                    column: self.column_for_state(idx),
                });
            }
        }
        Ok(trace)
    }
}

/// Runs a scenario twice, sync on and sync off, for side-by-side comparison.
pub fn run_comparison(scenario: &Scenario) -> Result<(Trace, Trace)> {
    let sync_on = ClosedLoopSim::new(scenario, true)?.run()?;
    let sync_off = ClosedLoopSim::new(scenario, false)?.run()?;
    Ok((sync_on, sync_off))
}
