//! Closed-loop rigid-body simulation.
//!
//! The payload follows the Newton-Euler equations in its own frame,
//!
//! ```text
//! m v̇ + ω × m v + m g R_wpᵀ e₃ = f_p        ṗ = R_wp v
//! J ω̇ + ω × J ω = τ_p                       Ṙ_wp = R_wp ω̂
//! ```
//!
//! and each hinge is a pure inertia, `J_x γ̈_i = τ_γi`. Thrusts are held over
//! a step while the wrench they produce is re-evaluated at the tilt of every
//! Runge-Kutta stage.

mod log;
mod trajectory;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{applied_wrench, ControlError, Controller, ControllerConfig, Measurement};
use crate::geom::{hat, orthonormalize, rpy_from_rotation, Mat3, Vec3};
use crate::platform::{ParamsError, PlatformParams, TiltVector};
use crate::tiltopt::TiltTable;

pub use log::{LogRecord, SimLog};
pub use trajectory::{wind_force, DisturbanceZone, Trajectory, TrajectoryKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("tilt table was built for different platform parameters")]
    TableMismatch,
    #[error("tilt table covers lateral forces [{x0}, {x1}] × [{y0}, {y1}] N but the scenario needs ±{need} N")]
    TableRange {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        need: f64,
    },
    #[error("allocation infeasible for {steps} consecutive steps at t = {t} s")]
    Infeasible { t: f64, steps: usize },
    #[error("hinge {index} reached {value} rad, outside ±π/2")]
    TiltEscape { index: usize, value: f64 },
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Params(#[from] ParamsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    /// World frame [m].
    pub position: Vec3,
    pub attitude: Mat3,
    /// Payload frame [m/s].
    pub velocity: Vec3,
    /// Payload frame [rad/s].
    pub omega: Vec3,
    pub gamma: Vec<f64>,
    pub gamma_dot: Vec<f64>,
    pub time: f64,
}

impl SimState {
    pub fn at_rest(position: Vec3, gamma: Vec<f64>) -> Self {
        let n = gamma.len();
        Self {
            position,
            attitude: Mat3::identity(),
            velocity: Vec3::zeros(),
            omega: Vec3::zeros(),
            gamma,
            gamma_dot: vec![0.0; n],
            time: 0.0,
        }
    }

    pub fn velocity_world(&self) -> Vec3 {
        self.attitude * self.velocity
    }

    /// Kinetic plus gravitational potential energy [J].
    pub fn mechanical_energy(&self, params: &PlatformParams) -> f64 {
        let j = params.inertia_matrix();
        0.5 * params.mass * self.velocity.norm_squared()
            + 0.5 * self.omega.dot(&(j * self.omega))
            + params.mass * params.gravity * self.position.z
    }

    /// Angular momentum about the CoG, world frame.
    pub fn angular_momentum_world(&self, params: &PlatformParams) -> Vec3 {
        self.attitude * (params.inertia_matrix() * self.omega)
    }

    fn pack(&self) -> DVector<f64> {
        let n = self.gamma.len();
        let mut x = DVector::zeros(18 + 2 * n);
        x.rows_mut(0, 3).copy_from(&self.position);
        x.rows_mut(3, 9).copy_from_slice(self.attitude.as_slice());
        x.rows_mut(12, 3).copy_from(&self.velocity);
        x.rows_mut(15, 3).copy_from(&self.omega);
        x.rows_mut(18, n).copy_from_slice(&self.gamma);
        x.rows_mut(18 + n, n).copy_from_slice(&self.gamma_dot);
        x
    }

    fn unpack(x: &DVector<f64>, time: f64) -> Self {
        let n = (x.len() - 18) / 2;
        Self {
            position: Vec3::from_column_slice(&x.as_slice()[0..3]),
            attitude: Mat3::from_column_slice(&x.as_slice()[3..12]),
            velocity: Vec3::from_column_slice(&x.as_slice()[12..15]),
            omega: Vec3::from_column_slice(&x.as_slice()[15..18]),
            gamma: x.as_slice()[18..18 + n].to_vec(),
            gamma_dot: x.as_slice()[18 + n..].to_vec(),
            time,
        }
    }
}

/// Time derivative of every state component.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub position: Vec3,
    pub attitude: Mat3,
    pub velocity: Vec3,
    pub omega: Vec3,
    pub gamma: Vec<f64>,
    pub gamma_dot: Vec<f64>,
}

/// What drives the platform over one step.
#[derive(Debug, Clone, PartialEq)]
pub enum Actuation {
    /// Rotor thrusts, mapped through the thrust maps at the current tilt.
    Thrusts(Vec<f64>),
    /// A payload wrench and hinge torques given directly.
    Wrench {
        force: Vec3,
        torque: Vec3,
        joint_torques: Vec<f64>,
    },
}

/// Derivative under payload-frame wrench `(force, torque)`, hinge torques and
/// an external world-frame force.
pub fn dynamics_derivative(
    state: &SimState,
    force: &Vec3,
    torque: &Vec3,
    joint_torques: &[f64],
    external_w: &Vec3,
    params: &PlatformParams,
) -> StateDerivative {
    let m = params.mass;
    let j = params.inertia_matrix();
    let r = &state.attitude;
    let (v, w) = (&state.velocity, &state.omega);
    let f_total = force + r.transpose() * external_w;
    let v_dot = (f_total - w.cross(&(m * v))) / m - params.gravity * r.transpose() * Vec3::z();
    let w_dot = j.try_inverse().expect("validated inertia") * (torque - w.cross(&(j * w)));
    StateDerivative {
        position: r * v,
        attitude: r * hat(w),
        velocity: v_dot,
        omega: w_dot,
        gamma: state.gamma_dot.clone(),
        gamma_dot: joint_torques
            .iter()
            .zip(&params.joint_inertia)
            .map(|(t, jx)| t / jx)
            .collect(),
    }
}

fn derivative_packed(
    x: &DVector<f64>,
    act: &Actuation,
    zone: &DisturbanceZone,
    params: &PlatformParams,
) -> Result<DVector<f64>, SimError> {
    let s = SimState::unpack(x, 0.0);
    let (force, torque, joint) = match act {
        Actuation::Thrusts(u) => {
            let gamma = TiltVector::new(s.gamma.clone()).map_err(|_| escape(&s.gamma))?;
            applied_wrench(params, &gamma, u)?
        }
        Actuation::Wrench {
            force,
            torque,
            joint_torques,
        } => (*force, *torque, joint_torques.clone()),
    };
    let wind = wind_force(zone, &s.position);
    let d = dynamics_derivative(&s, &force, &torque, &joint, &wind, params);
    let packed = SimState {
        position: d.position,
        attitude: d.attitude,
        velocity: d.velocity,
        omega: d.omega,
        gamma: d.gamma,
        gamma_dot: d.gamma_dot,
        time: 0.0,
    };
    Ok(packed.pack())
}

fn escape(gamma: &[f64]) -> SimError {
    let (index, value) = gamma
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap_or((0, f64::NAN));
    SimError::TiltEscape { index, value }
}

/// One classical Runge-Kutta step with the actuation held, followed by
/// re-orthonormalization of the attitude.
pub fn rk4_step(
    state: &SimState,
    act: &Actuation,
    zone: &DisturbanceZone,
    params: &PlatformParams,
    dt: f64,
) -> Result<SimState, SimError> {
    let x = state.pack();
    let k1 = derivative_packed(&x, act, zone, params)?;
    let k2 = derivative_packed(&(&x + &k1 * (0.5 * dt)), act, zone, params)?;
    let k3 = derivative_packed(&(&x + &k2 * (0.5 * dt)), act, zone, params)?;
    let k4 = derivative_packed(&(&x + &k3 * dt), act, zone, params)?;
    let next = &x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    let mut s = SimState::unpack(&next, state.time + dt);
    s.attitude = orthonormalize(&s.attitude);
    Ok(s)
}

/// Everything that defines a closed-loop run besides the platform, the
/// controller gains and the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub trajectory: Trajectory,
    pub zone: DisturbanceZone,
    /// Simulated time [s].
    pub duration: f64,
    /// Physics and control step [s]; overrides the controller's own `dt`.
    pub dt: f64,
    /// Abort after this many consecutive infeasible allocations.
    pub max_infeasible_steps: usize,
    /// Keep every `log_every`-th step in the log.
    pub log_every: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            trajectory: Trajectory::default(),
            zone: DisturbanceZone::default(),
            duration: 40.0,
            dt: 1e-3,
            max_infeasible_steps: 10,
            log_every: 10,
        }
    }
}

impl Scenario {
    /// Hold the origin in still air.
    pub fn hover(duration: f64) -> Self {
        Self {
            trajectory: Trajectory::hover(duration),
            zone: DisturbanceZone::none(),
            duration,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return bad(format!("duration = {} must be nonnegative", self.duration));
        }
        if self.trajectory.kind != TrajectoryKind::Hover && !(self.trajectory.duration > 0.0) {
            return bad("trajectory duration must be positive".into());
        }
        if !(self.zone.x_range[0] < self.zone.x_range[1]) {
            return bad("zone x_range must satisfy x_lo < x_hi".into());
        }
        if self.log_every == 0 {
            return bad("log_every must be at least 1".into());
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// Peak errors over every simulated step, not only the logged ones.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimSummary {
    pub steps: usize,
    /// `max ‖p − p_ref‖` [m].
    pub max_position_error: f64,
    /// Largest rotation angle of `R_wp` away from level [deg].
    pub max_orientation_error_deg: f64,
    pub infeasible_steps: usize,
    /// Largest lateral force reference component seen [N].
    pub peak_lateral_reference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub log: SimLog,
    pub summary: SimSummary,
}

/// Rotation angle of `r` [rad].
pub fn rotation_angle(r: &Mat3) -> f64 {
    ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

/// Runs the closed loop: measure the exact state, hand the true wind to the
/// controller as its disturbance estimate, apply the thrusts, integrate.
pub fn run(
    params: &PlatformParams,
    ctrl_cfg: &ControllerConfig,
    table: &TiltTable,
    scenario: &Scenario,
) -> Result<SimOutput, SimError> {
    params.validate()?;
    scenario.validate()?;
    if table.params_hash != params.content_hash() {
        return Err(SimError::TableMismatch);
    }
    let need = ctrl_cfg.force_ref_clamp;
    if !(table.covers(-need, -need) && table.covers(need, need)) {
        return Err(SimError::TableRange {
            x0: table.axis_x[0],
            x1: *table.axis_x.last().unwrap(),
            y0: table.axis_y[0],
            y1: *table.axis_y.last().unwrap(),
            need,
        });
    }
    let peak = scenario
        .trajectory
        .peak_lateral_force(params.mass, &scenario.zone, scenario.dt.max(1e-3));
    if peak > need {
        return Err(SimError::Config(format!(
            "trajectory needs {peak:.3} N of lateral force, beyond the ±{need} N reference range"
        )));
    }

    let cfg = ControllerConfig {
        dt: scenario.dt,
        ..ctrl_cfg.clone()
    };
    let traj = &scenario.trajectory;
    let r0 = traj.sample(0.0);
    let f0 =
        params.mass * r0.acceleration + Vec3::new(0.0, 0.0, params.weight()) - wind_force(&scenario.zone, &r0.position);
    let mut ctrl = Controller::new(params, &cfg, table, &f0)?;
    let gamma0 = ctrl.tilt_reference(f0.x, f0.y);
    let mut state = SimState::at_rest(r0.position, gamma0);

    let mut log = SimLog::new(params.n_uavs);
    let mut summary = SimSummary::default();
    let mut streak = 0;
    let steps = scenario.steps();
    for k in 0..=steps {
        state.time = k as f64 * scenario.dt;
        let reference = traj.sample(state.time);
        let wind = wind_force(&scenario.zone, &state.position);
        let meas = Measurement {
            position: state.position,
            attitude: state.attitude,
            velocity_w: state.velocity_world(),
            omega: state.omega,
            gamma: TiltVector::new(state.gamma.clone()).map_err(|_| escape(&state.gamma))?,
            gamma_dot: state.gamma_dot.clone(),
        };
        let out = ctrl.step(&meas, &reference, &wind)?;

        summary.steps = k;
        summary.max_position_error = summary
            .max_position_error
            .max((state.position - reference.position).norm());
        summary.max_orientation_error_deg = summary
            .max_orientation_error_deg
            .max(rotation_angle(&state.attitude).to_degrees());
        summary.peak_lateral_reference = summary
            .peak_lateral_reference
            .max(out.f_p_ref.x.abs().max(out.f_p_ref.y.abs()));
        if out.allocation_feasible {
            streak = 0;
        } else {
            summary.infeasible_steps += 1;
            streak += 1;
            if streak > scenario.max_infeasible_steps {
                return Err(SimError::Infeasible {
                    t: state.time,
                    steps: streak,
                });
            }
        }
        if k % scenario.log_every == 0 {
            log.push(LogRecord {
                t: state.time,
                position: state.position,
                rpy: rpy_from_rotation(&state.attitude),
                velocity_w: state.velocity_world(),
                omega: state.omega,
                gamma: state.gamma.clone(),
                gamma_ref: out.gamma_ref.clone(),
                f_ref: out.f_p_ref,
                f_nom: out.f_p_nom,
                u: out.u.clone(),
                feasible: out.allocation_feasible,
                wind: scenario.zone.contains(&state.position),
            });
        }
        if k < steps {
            state = rk4_step(&state, &Actuation::Thrusts(out.u), &scenario.zone, params, scenario.dt)?;
        }
    }
    Ok(SimOutput { log, summary })
}
