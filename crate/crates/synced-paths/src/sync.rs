//! Parallel control paths with output synchronization.
//!
//! At any instant exactly one path is active: it tracks its own setpoint and
//! its output drives the plant. Every other path is a background path whose
//! input is switched from the tracking error to a sync error, the difference
//! between the active output and its own. Integral action on that error
//! parks the background path at the active operating point, so handing the
//! plant over to it produces no output jump.
//!
//! Path outputs with direct feedthrough appear inside their own sync error,
//! a scalar algebraic loop. It is solved exactly at every evaluation instead
//! of being broken with a one-sample delay, because a delay would leave
//! step-size artifacts exactly where the switching metrics look.

use crate::error::{Error, Result};
use crate::gating::GateSet;
use crate::lti::{Rk4, StateSpace, TransferFunction};

/// What a path is doing at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathRole {
    /// Driving the plant and tracking its own setpoint.
    Active,
    /// Following the active path through the gated sync error.
    Background,
}

/// The signal entering a path's dynamics at one instant: the tracking error
/// when active, the gated sync error when in the background.
pub fn path_drive_input(
    role: PathRole,
    setpoint: f64,
    measurement: f64,
    sync_gate: f64,
    active_output: f64,
    own_output: f64,
) -> f64 {
    match role {
        PathRole::Active => setpoint - measurement,
        PathRole::Background => sync_gate * (active_output - own_output),
    }
}

/// Declarative description of one control path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathConfig {
    /// Reference value for the measured plant output.
    pub setpoint: f64,
    /// Controller transfer function from drive input to path output.
    pub controller: TransferFunction,
    /// Index into the measurement vector this path tracks.
    pub measurement: usize,
    /// Output weight of the sync integrator state, when one is added.
    pub sync_gain: f64,
    /// Add a sync integrator if the controller has no pole at s = 0.
    pub augment: bool,
}

/// A realized control path.
///
/// When `augmented` is set, one extra state q is appended after the model
/// states. It integrates the sync error and contributes `sync_gain * q` to
/// the path output at all times, so the operating point it memorizes while
/// in the background carries over unchanged at the moment the path becomes
/// active. Controllers that already integrate (a PI, for instance) provide
/// that memory themselves and are left alone.
#[derive(Clone, Debug)]
pub struct ControlPath {
    pub setpoint: f64,
    pub model: StateSpace,
    pub measurement: usize,
    pub sync_gain: f64,
    pub augmented: bool,
}

impl ControlPath {
    pub fn new(config: &PathConfig) -> Result<Self> {
        if !config.setpoint.is_finite() {
            return Err(Error::Config(format!(
                "path setpoint must be finite, got {}",
                config.setpoint
            )));
        }
        if !config.sync_gain.is_finite() || config.sync_gain <= 0.0 {
            return Err(Error::Config(format!(
                "path sync gain must be positive and finite, got {}",
                config.sync_gain
            )));
        }
        let model = config.controller.realize();
        if model.d == -1.0 {
            return Err(Error::Config(
                "controller feedthrough of -1 makes the background sync loop singular".into(),
            ));
        }
        let augmented = config.augment && !config.controller.has_integrator();
        Ok(ControlPath {
            setpoint: config.setpoint,
            model,
            measurement: config.measurement,
            sync_gain: config.sync_gain,
            augmented,
        })
    }

    /// Number of states, including the sync integrator when present.
    pub fn dim(&self) -> usize {
        self.model.n + self.augmented as usize
    }

    /// State-dependent part of the path output: C x plus the sync
    /// integrator's contribution. The feedthrough term is added during
    /// resolution once the drive input is known.
    fn contribution(&self, states: &[f64]) -> f64 {
        let z: f64 = self
            .model
            .c
            .iter()
            .zip(states)
            .map(|(ci, xi)| ci * xi)
            .sum();
        if self.augmented {
            z + self.sync_gain * states[self.model.n]
        } else {
            z
        }
    }
}

/// Path outputs at one instant, after solving the sync algebraic loops.
#[derive(Clone, Debug)]
pub struct Resolution {
    /// Index of the active path.
    pub active: usize,
    /// Output of every path.
    pub outputs: Vec<f64>,
    /// Gated sync error of every path; zero for the active path.
    pub sync_errors: Vec<f64>,
    /// The control signal handed to the plant, the active path's output.
    pub y_c: f64,
}

/// A bank of parallel control paths sharing one flat state vector.
///
/// Path 0 is active while the selector gate w is high, path 1 while it is
/// low. Their sync drives are gated by u_bar and u respectively, matching
/// the convention that u runs in step with w. Paths beyond the first two
/// are permanent background paths that sync during both gate phases.
#[derive(Clone, Debug)]
pub struct SyncedController {
    paths: Vec<ControlPath>,
    offsets: Vec<usize>,
    dim: usize,
}

impl SyncedController {
    pub fn new(paths: Vec<ControlPath>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::Config(
                "at least one control path is required".into(),
            ));
        }
        let mut offsets = Vec::with_capacity(paths.len());
        let mut dim = 0;
        for path in &paths {
            offsets.push(dim);
            dim += path.dim();
        }
        Ok(SyncedController {
            paths,
            offsets,
            dim,
        })
    }

    pub fn paths(&self) -> &[ControlPath] {
        &self.paths
    }

    /// Total state dimension across all paths.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All-zero initial state.
    pub fn initial_state(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    /// Where path `i`'s states start in the flat state vector.
    pub fn state_offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    /// The slice of `states` belonging to path `i`.
    pub fn path_states<'a>(&self, states: &'a [f64], i: usize) -> &'a [f64] {
        &states[self.offsets[i]..self.offsets[i] + self.paths[i].dim()]
    }

    fn active_index(&self, gates: &GateSet) -> usize {
        if gates.w == 1.0 || self.paths.len() == 1 {
            0
        } else {
            1
        }
    }

    fn sync_gate(&self, i: usize, gates: &GateSet) -> f64 {
        match i {
            0 => gates.u_bar,
            1 => gates.u,
            // Later paths are never active, so they may sync in both phases.
            _ => gates.u + gates.u_bar,
        }
    }

    /// Computes every path output at one instant, writing into the provided
    /// buffers and returning the active index and plant drive. The active
    /// output is explicit feedback; each background output comes from solving
    /// its scalar sync loop in closed form.
    pub fn resolve_into(
        &self,
        states: &[f64],
        gates: &GateSet,
        measurements: &[f64],
        outputs: &mut [f64],
        sync_errors: &mut [f64],
    ) -> (usize, f64) {
        let active = self.active_index(gates);
        let act = &self.paths[active];
        let z_act = act.contribution(self.path_states(states, active));
        let x_act = z_act + act.model.d * (act.setpoint - measurements[act.measurement]);
        for (i, path) in self.paths.iter().enumerate() {
            if i == active {
                outputs[i] = x_act;
                sync_errors[i] = 0.0;
                continue;
            }
            let g = self.sync_gate(i, gates);
            let z = path.contribution(self.path_states(states, i));
            let x = (z + path.model.d * g * x_act) / (1.0 + g * path.model.d);
            outputs[i] = x;
            sync_errors[i] = g * (x_act - x);
        }
        (active, x_act)
    }

    /// Allocating convenience wrapper around [`resolve_into`].
    ///
    /// [`resolve_into`]: SyncedController::resolve_into
    pub fn resolve(&self, states: &[f64], gates: &GateSet, measurements: &[f64]) -> Resolution {
        let mut outputs = vec![0.0; self.paths.len()];
        let mut sync_errors = vec![0.0; self.paths.len()];
        let (active, y_c) =
            self.resolve_into(states, gates, measurements, &mut outputs, &mut sync_errors);
        Resolution {
            active,
            outputs,
            sync_errors,
            y_c,
        }
    }

    /// Writes the state derivatives given a prior resolution. The active
    /// path integrates its tracking error with its sync integrator frozen;
    /// background paths integrate their gated sync error everywhere.
    pub fn derivatives_into(
        &self,
        states: &[f64],
        active: usize,
        measurements: &[f64],
        sync_errors: &[f64],
        dstates: &mut [f64],
    ) {
        for (i, path) in self.paths.iter().enumerate() {
            let offset = self.offsets[i];
            let x = &states[offset..offset + path.dim()];
            let dx = &mut dstates[offset..offset + path.dim()];
            let input = if i == active {
                path.setpoint - measurements[path.measurement]
            } else {
                sync_errors[i]
            };
            path.model
                .derivative(&x[..path.model.n], input, &mut dx[..path.model.n]);
            if path.augmented {
                dx[path.model.n] = if i == active { 0.0 } else { input };
            }
        }
    }

    /// One RK4 step with the gates held and the measurement vector constant
    /// over the step. Suits standalone controller studies; the closed-loop
    /// simulator integrates controller and plant states jointly instead.
    pub fn advance(
        &self,
        states: &mut [f64],
        t: f64,
        dt: f64,
        gates: &GateSet,
        measurements: &[f64],
        rk4: &mut Rk4,
    ) {
        let mut outputs = vec![0.0; self.paths.len()];
        let mut sync_errors = vec![0.0; self.paths.len()];
        rk4.step(states, t, dt, |_, x, dx| {
            let (active, _) =
                self.resolve_into(x, gates, measurements, &mut outputs, &mut sync_errors);
            self.derivatives_into(x, active, measurements, &sync_errors, dx);
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gating::GateSet;
    use crate::lti::PiParams;
    use approx::assert_relative_eq;

    fn pi_path(kp: f64, ki: f64, setpoint: f64, measurement: usize) -> PathConfig {
        PathConfig {
            setpoint,
            controller: PiParams::new(kp, ki).unwrap().transfer_function(),
            measurement,
            sync_gain: 1.0,
            augment: true,
        }
    }

    fn p_path(kp: f64, setpoint: f64, augment: bool) -> PathConfig {
        PathConfig {
            setpoint,
            controller: TransferFunction::new(vec![kp], vec![1.0]).unwrap(),
            measurement: 0,
            sync_gain: 1.0,
            augment,
        }
    }

    const PATH0_ACTIVE: GateSet = GateSet {
        w: 1.0,
        w_bar: 0.0,
        u: 1.0,
        u_bar: 0.0,
    };
    const PATH1_ACTIVE: GateSet = GateSet {
        w: 0.0,
        w_bar: 1.0,
        u: 0.0,
        u_bar: 1.0,
    };
    const SYNC_OFF: GateSet = GateSet {
        w: 1.0,
        w_bar: 0.0,
        u: 0.0,
        u_bar: 0.0,
    };

    #[test]
    fn pi_paths_are_not_augmented() {
        let path = ControlPath::new(&pi_path(3.0, 18.0, 50.0, 0)).unwrap();
        assert!(!path.augmented);
        assert_eq!(path.dim(), 1);
    }

    #[test]
    fn proportional_path_gains_a_sync_integrator() {
        let path = ControlPath::new(&p_path(3.0, 600.0, true)).unwrap();
        assert!(path.augmented);
        assert_eq!(path.dim(), 1);
        let bare = ControlPath::new(&p_path(3.0, 600.0, false)).unwrap();
        assert_eq!(bare.dim(), 0);
    }

    #[test]
    fn rejects_singular_feedthrough() {
        assert!(ControlPath::new(&p_path(-1.0, 0.0, false)).is_err());
    }

    #[test]
    fn rejects_bad_sync_gain_and_setpoint() {
        let mut cfg = p_path(2.0, 0.0, true);
        cfg.sync_gain = 0.0;
        assert!(ControlPath::new(&cfg).is_err());
        let mut cfg = p_path(2.0, 0.0, true);
        cfg.setpoint = f64::NAN;
        assert!(ControlPath::new(&cfg).is_err());
    }

    fn two_pi_controller() -> SyncedController {
        SyncedController::new(vec![
            ControlPath::new(&pi_path(2.0, 10.0, 100.0, 0)).unwrap(),
            ControlPath::new(&pi_path(3.0, 18.0, 50.0, 1)).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn active_path_tracks_its_own_error() {
        let ctrl = two_pi_controller();
        // Integrator states 5 and 7; measurements 40 and 20.
        let states = [5.0, 7.0];
        let r = ctrl.resolve(&states, &PATH0_ACTIVE, &[40.0, 20.0]);
        assert_eq!(r.active, 0);
        // X0 = ki*x + kp*(sp - y) = 10*5 + 2*60.
        assert_relative_eq!(r.outputs[0], 170.0);
        assert_eq!(r.y_c, r.outputs[0]);
        assert_eq!(r.sync_errors[0], 0.0);
    }

    #[test]
    fn background_loop_is_solved_exactly() {
        let ctrl = two_pi_controller();
        let states = [5.0, 7.0];
        let r = ctrl.resolve(&states, &PATH0_ACTIVE, &[40.0, 20.0]);
        // X1 = (ki*x + kp*X0)/(1 + kp) = (126 + 3*170)/4.
        assert_relative_eq!(r.outputs[1], 159.0);
        assert_relative_eq!(r.sync_errors[1], 170.0 - 159.0);
        // The resolved output satisfies its own defining equation.
        let reconstructed = 18.0 * states[1] + 3.0 * r.sync_errors[1];
        assert_relative_eq!(r.outputs[1], reconstructed);
    }

    #[test]
    fn sync_off_freezes_background_paths() {
        let ctrl = two_pi_controller();
        let states = [5.0, 7.0];
        let r = ctrl.resolve(&states, &SYNC_OFF, &[40.0, 20.0]);
        assert_relative_eq!(r.outputs[1], 126.0);
        assert_eq!(r.sync_errors[1], 0.0);
        let mut dstates = [0.0; 2];
        ctrl.derivatives_into(
            &states,
            r.active,
            &[40.0, 20.0],
            &r.sync_errors,
            &mut dstates,
        );
        assert_eq!(dstates[1], 0.0);
        assert_relative_eq!(dstates[0], 60.0);
    }

    #[test]
    fn selector_flips_the_roles() {
        let ctrl = two_pi_controller();
        let states = [5.0, 7.0];
        let r = ctrl.resolve(&states, &PATH1_ACTIVE, &[40.0, 20.0]);
        assert_eq!(r.active, 1);
        // X1 = 18*7 + 3*(50 - 20) = 216 drives the plant.
        assert_relative_eq!(r.y_c, 216.0);
        // X0 = (10*5 + 2*216)/(1 + 2).
        assert_relative_eq!(r.outputs[0], 482.0 / 3.0);
    }

    #[test]
    fn bare_proportional_path_settles_at_a_fraction() {
        // Without a sync integrator the loop X = kp (Xa - X) leaves the
        // stationary ratio kp/(1 + kp) immediately.
        let ctrl = SyncedController::new(vec![
            ControlPath::new(&p_path(1.0, 600.0, false)).unwrap(),
            ControlPath::new(&p_path(3.0, 0.0, false)).unwrap(),
        ])
        .unwrap();
        let r = ctrl.resolve(&[], &PATH0_ACTIVE, &[0.0, 0.0]);
        assert_relative_eq!(r.y_c, 600.0);
        assert_relative_eq!(r.outputs[1], 450.0);
    }

    #[test]
    fn augmented_proportional_path_closes_the_gap() {
        let ctrl = SyncedController::new(vec![
            ControlPath::new(&p_path(1.0, 600.0, false)).unwrap(),
            ControlPath::new(&p_path(3.0, 0.0, true)).unwrap(),
        ])
        .unwrap();
        let mut states = ctrl.initial_state();
        assert_eq!(states.len(), 1);
        let mut rk4 = Rk4::new(1);
        let dt = 1e-3;
        // Pole at -sync_gain/(1 + kp) = -0.25, so 80 s is ~20 time constants.
        for step in 0..80_000 {
            ctrl.advance(
                &mut states,
                step as f64 * dt,
                dt,
                &PATH0_ACTIVE,
                &[0.0, 0.0],
                &mut rk4,
            );
        }
        let r = ctrl.resolve(&states, &PATH0_ACTIVE, &[0.0, 0.0]);
        assert_relative_eq!(r.outputs[1] / r.y_c, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn background_pi_follows_the_known_exponential() {
        // A PI(3,18) background path tracking a constant 600 obeys
        // X(t) = 600 - 150 e^{-4.5 t}: the loop pole is -ki/(1 + kp).
        let ctrl = SyncedController::new(vec![
            ControlPath::new(&p_path(1.0, 600.0, false)).unwrap(),
            ControlPath::new(&pi_path(3.0, 18.0, 0.0, 1)).unwrap(),
        ])
        .unwrap();
        let mut states = ctrl.initial_state();
        let mut rk4 = Rk4::new(1);
        let dt = 1e-3;
        for step in 0..=2_000 {
            let t = step as f64 * dt;
            let r = ctrl.resolve(&states, &PATH0_ACTIVE, &[0.0, 0.0]);
            let expected = 600.0 - 150.0 * (-4.5 * t).exp();
            assert_relative_eq!(r.outputs[1], expected, max_relative = 1e-7);
            ctrl.advance(&mut states, t, dt, &PATH0_ACTIVE, &[0.0, 0.0], &mut rk4);
        }
    }

    #[test]
    fn extra_paths_sync_in_both_phases() {
        let ctrl = SyncedController::new(vec![
            ControlPath::new(&p_path(1.0, 600.0, false)).unwrap(),
            ControlPath::new(&pi_path(3.0, 18.0, 0.0, 1)).unwrap(),
            ControlPath::new(&pi_path(2.0, 5.0, 0.0, 0)).unwrap(),
        ])
        .unwrap();
        // Park path 1 away from zero so its active output is nonzero too;
        // otherwise the second phase has nothing for path 2 to chase.
        let mut states = ctrl.initial_state();
        states[ctrl.state_offset(1)] = 100.0;
        for gates in [PATH0_ACTIVE, PATH1_ACTIVE] {
            let r = ctrl.resolve(&states, &gates, &[0.0, 0.0]);
            assert!(
                r.sync_errors[2] != 0.0,
                "third path idle in phase {gates:?}"
            );
        }
        // With sync disabled it freezes like everyone else.
        let r = ctrl.resolve(&states, &SYNC_OFF, &[0.0, 0.0]);
        assert_eq!(r.sync_errors[2], 0.0);
    }

    #[test]
    fn drive_input_selection() {
        assert_eq!(
            path_drive_input(PathRole::Active, 100.0, 40.0, 0.0, 0.0, 0.0),
            60.0
        );
        assert_eq!(
            path_drive_input(PathRole::Background, 100.0, 40.0, 1.0, 170.0, 150.0),
            20.0
        );
        assert_eq!(
            path_drive_input(PathRole::Background, 100.0, 40.0, 0.0, 170.0, 150.0),
            0.0
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // The closed-form loop solution must satisfy the defining
            // equation X = z + kp g (Xa - X) for any proportional gain.
            #[test]
            fn background_resolution_is_a_fixed_point(
                kp in -0.9f64..20.0,
                z_state in -100.0f64..100.0,
                active_level in -1000.0f64..1000.0,
            ) {
                let ctrl = SyncedController::new(vec![
                    ControlPath::new(&p_path(1.0, active_level, false)).unwrap(),
                    ControlPath::new(&pi_path(kp, 18.0, 0.0, 1)).unwrap(),
                ]).unwrap();
                let states = [z_state];
                let r = ctrl.resolve(&states, &PATH0_ACTIVE, &[0.0, 0.0]);
                let x = r.outputs[1];
                let fixed_point = 18.0 * z_state + kp * (r.y_c - x);
                prop_assert!((x - fixed_point).abs() <= 1e-9 * x.abs().max(1.0));
            }

            // An augmented proportional background path must reach the
            // active output itself, not a fraction of it.
            #[test]
            fn augmented_path_reaches_unity_ratio(kp in 0.5f64..4.0) {
                let ctrl = SyncedController::new(vec![
                    ControlPath::new(&p_path(1.0, 600.0, false)).unwrap(),
                    ControlPath::new(&p_path(kp, 0.0, true)).unwrap(),
                ]).unwrap();
                let mut states = ctrl.initial_state();
                let mut rk4 = Rk4::new(1);
                let dt = 5e-3;
                for step in 0..16_000 {
                    ctrl.advance(&mut states, step as f64 * dt, dt, &PATH0_ACTIVE, &[0.0, 0.0], &mut rk4);
                }
                let r = ctrl.resolve(&states, &PATH0_ACTIVE, &[0.0, 0.0]);
                prop_assert!((r.outputs[1] / r.y_c - 1.0).abs() <= 1e-4);
            }
        }
    }
}
