//! Cascaded controller.
//!
//! The major loop turns pose errors into a payload wrench reference around
//! the nominal force. The minor loop low-pass filters the lateral force
//! reference, looks the tilt reference up in the tilt table and drives the
//! hinges with a PID. Thrusts come from a min-range allocation computed with
//! the tilt angles the platform has *now*, not the ones it is heading to: as
//! long as the current HFS holds the force reference, the slow hinges never
//! limit the force response.

mod interp;
mod pid;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{rpy_from_rotation, Mat3, Vec3};
use crate::lp::{minimize_range, LpError, LpStatus};
use crate::platform::{build_allocation_maps, AllocationMaps, ParamsError, PlatformParams, TiltVector};
use crate::tiltopt::TiltTable;

pub use interp::TableInterpolator;
pub use pid::{pid_step, pid_step_with_rate, PidGains, PidState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("invalid controller setting: {0}")]
    Config(String),
    #[error("tilt table has {table} joints, platform has {platform}")]
    TableShape { table: usize, platform: usize },
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub pid_trans: PidGains,
    pub pid_rot: PidGains,
    pub pid_tilt: PidGains,
    /// Time constant of the force-reference low-pass filter [s].
    pub lpf_time_constant: f64,
    pub dt: f64,
    /// Lateral force references are clamped to `±force_ref_clamp` [N].
    pub force_ref_clamp: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            pid_trans: PidGains::new(1.0, 0.1, 1.0),
            pid_rot: PidGains::new(10.0, 10.0, 10.0),
            pid_tilt: PidGains::new(20.0, 1.0, 5.0),
            lpf_time_constant: 1.0,
            dt: 1e-3,
            force_ref_clamp: 1.0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        for (name, g) in [
            ("pid_trans", &self.pid_trans),
            ("pid_rot", &self.pid_rot),
            ("pid_tilt", &self.pid_tilt),
        ] {
            if !g.is_valid() {
                return Err(ControlError::Config(format!(
                    "{name} gains must be finite and nonnegative"
                )));
            }
        }
        let positive = [
            ("dt", self.dt),
            ("lpf_time_constant", self.lpf_time_constant),
            ("force_ref_clamp", self.force_ref_clamp),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ControlError::Config(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// Reference errors for the major loop, all in the world frame except the
/// angular rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseError {
    /// `p_ref − p` [m].
    pub position: Vec3,
    /// `v_ref − v` [m/s].
    pub velocity: Vec3,
    /// Roll-pitch-yaw reference minus measurement [rad].
    pub attitude: Vec3,
    /// `ω_ref − ω`, payload frame [rad/s].
    pub rate: Vec3,
}

/// Integrator states of the two major-loop PIDs.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorLoop {
    trans: PidState,
    rot: PidState,
}

impl MajorLoop {
    pub fn new(integral_limit: f64) -> Self {
        Self {
            trans: PidState::new(3, integral_limit),
            rot: PidState::new(3, integral_limit),
        }
    }

    /// Payload-frame wrench reference `(f_p_ref, τ_p_ref)`:
    /// `f_p_ref = R_wpᵀ (f_nom_w + PID(e_p, ė_p) − d̂_w)` with the lateral part
    /// clamped, `τ_p_ref = PID(e_rpy, e_ω)`.
    pub fn step(
        &mut self,
        cfg: &ControllerConfig,
        err: &PoseError,
        nominal_w: &Vec3,
        disturbance_est_w: &Vec3,
        r_wp: &Mat3,
    ) -> (Vec3, Vec3) {
        let dt = cfg.dt;
        let corr = pid_step_with_rate(
            &mut self.trans,
            err.position.as_slice(),
            err.velocity.as_slice(),
            &cfg.pid_trans,
            dt,
        );
        let f_w = nominal_w + Vec3::from_column_slice(&corr) - disturbance_est_w;
        let mut f_p = r_wp.transpose() * f_w;
        f_p.x = f_p.x.clamp(-cfg.force_ref_clamp, cfg.force_ref_clamp);
        f_p.y = f_p.y.clamp(-cfg.force_ref_clamp, cfg.force_ref_clamp);
        let tau = pid_step_with_rate(
            &mut self.rot,
            err.attitude.as_slice(),
            err.rate.as_slice(),
            &cfg.pid_rot,
            dt,
        );
        (f_p, Vec3::from_column_slice(&tau))
    }
}

/// First-order low-pass filter `1/(τ s + 1)` discretized exactly under a
/// zero-order hold, on the two lateral force components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceFilter {
    state: [f64; 2],
    decay: f64,
}

impl ForceFilter {
    pub fn new(time_constant: f64, dt: f64, initial: [f64; 2]) -> Self {
        Self {
            state: initial,
            decay: (-dt / time_constant).exp(),
        }
    }

    /// Per-step contraction factor `e^{−dt/τ}`.
    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn output(&self) -> [f64; 2] {
        self.state
    }

    pub fn step(&mut self, input: [f64; 2]) -> [f64; 2] {
        for k in 0..2 {
            self.state[k] = self.decay * self.state[k] + (1.0 - self.decay) * input[k];
        }
        self.state
    }
}

/// Thrusts from a min-range allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub u: Vec<f64>,
    pub feasible: bool,
    /// `max(u) − min(u)`, infinite when infeasible.
    pub range: f64,
}

/// Thrusts `u ∈ [0, u_max]` realizing `[f_p; τ_p; τ_γ] = M_all u` with the
/// smallest spread between rotors. `maps` must be built at the current tilt.
pub fn allocate(
    maps: &AllocationMaps,
    f_p_ref: &Vec3,
    tau_p_ref: &Vec3,
    tau_gamma_ref: &[f64],
    u_max: f64,
) -> Result<Allocation, LpError> {
    let n = maps.n_rotors();
    let mut b = Vec::with_capacity(6 + tau_gamma_ref.len());
    b.extend_from_slice(f_p_ref.as_slice());
    b.extend_from_slice(tau_p_ref.as_slice());
    b.extend_from_slice(tau_gamma_ref);
    let sol = minimize_range(&maps.m_all, &b, &vec![u_max; n])?;
    Ok(match sol.status {
        LpStatus::Optimal => Allocation {
            u: sol.x,
            feasible: true,
            range: sol.range,
        },
        _ => Allocation {
            u: vec![0.0; n],
            feasible: false,
            range: f64::INFINITY,
        },
    })
}

/// What the controller sees of the platform.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub position: Vec3,
    pub attitude: Mat3,
    /// Linear velocity, world frame.
    pub velocity_w: Vec3,
    /// Angular velocity, payload frame.
    pub omega: Vec3,
    pub gamma: TiltVector,
    pub gamma_dot: Vec<f64>,
}

/// Position reference and its first two derivatives, world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub f_p_ref: Vec3,
    pub tau_p_ref: Vec3,
    /// Feedforward force `R_wpᵀ (m a_ref + m g e₃)`.
    pub f_p_nom: Vec3,
    pub gamma_ref: Vec<f64>,
    pub tau_gamma_ref: Vec<f64>,
    /// Thrusts applied this step.
    pub u: Vec<f64>,
    /// False when the allocation LP had no solution and `u` repeats the last
    /// feasible thrusts.
    pub allocation_feasible: bool,
}

/// The full controller with its internal state.
#[derive(Debug, Clone)]
pub struct Controller {
    cfg: ControllerConfig,
    params: PlatformParams,
    table: TableInterpolator,
    major: MajorLoop,
    tilt: PidState,
    filter: ForceFilter,
    last_u: Vec<f64>,
}

impl Controller {
    /// The filter starts at `initial_force`'s lateral part so that a platform
    /// starting at rest sees no filter transient.
    pub fn new(
        params: &PlatformParams,
        cfg: &ControllerConfig,
        table: &TiltTable,
        initial_force: &Vec3,
    ) -> Result<Self, ControlError> {
        params.validate()?;
        cfg.validate()?;
        if table.n_uavs() != params.n_uavs {
            return Err(ControlError::TableShape {
                table: table.n_uavs(),
                platform: params.n_uavs,
            });
        }
        let limit = params.u_max * params.n_rotors() as f64;
        let hover = params.weight() / params.n_rotors() as f64;
        Ok(Self {
            cfg: cfg.clone(),
            params: params.clone(),
            table: TableInterpolator::new(table),
            major: MajorLoop::new(limit),
            tilt: PidState::new(params.n_uavs, limit),
            filter: ForceFilter::new(cfg.lpf_time_constant, cfg.dt, [initial_force.x, initial_force.y]),
            last_u: vec![hover; params.n_rotors()],
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    /// Table lookup at a lateral force, clamped to the table range.
    pub fn tilt_reference(&self, fx: f64, fy: f64) -> Vec<f64> {
        self.table.eval(fx, fy)
    }

    /// Current output of the force filter.
    pub fn filtered_force(&self) -> [f64; 2] {
        self.filter.output()
    }

    pub fn step(
        &mut self,
        meas: &Measurement,
        reference: &Reference,
        disturbance_est_w: &Vec3,
    ) -> Result<ControlOutput, ControlError> {
        let m = self.params.mass;
        let g = self.params.gravity;
        let r_wp = &meas.attitude;
        let nominal_w = m * reference.acceleration + Vec3::new(0.0, 0.0, m * g);
        let err = PoseError {
            position: reference.position - meas.position,
            velocity: reference.velocity - meas.velocity_w,
            attitude: -rpy_from_rotation(r_wp),
            rate: -meas.omega,
        };
        let (f_p_ref, tau_p_ref) = self.major.step(&self.cfg, &err, &nominal_w, disturbance_est_w, r_wp);

        let fbar = self.filter.step([f_p_ref.x, f_p_ref.y]);
        let gamma_ref = self.table.eval(fbar[0], fbar[1]);
        let gamma_err: Vec<f64> = gamma_ref
            .iter()
            .zip(meas.gamma.as_slice())
            .map(|(r, y)| r - y)
            .collect();
        let neg_rate: Vec<f64> = meas.gamma_dot.iter().map(|v| -v).collect();
        let tau_gamma_ref = pid_step_with_rate(&mut self.tilt, &gamma_err, &neg_rate, &self.cfg.pid_tilt, self.cfg.dt);

        let maps = build_allocation_maps(&self.params, &meas.gamma)?;
        let alloc = allocate(&maps, &f_p_ref, &tau_p_ref, &tau_gamma_ref, self.params.u_max)?;
        if alloc.feasible {
            self.last_u.clone_from(&alloc.u);
        }
        Ok(ControlOutput {
            f_p_ref,
            tau_p_ref,
            f_p_nom: r_wp.transpose() * nominal_w,
            gamma_ref,
            tau_gamma_ref,
            u: self.last_u.clone(),
            allocation_feasible: alloc.feasible,
        })
    }
}

/// Payload wrench and hinge torques produced by thrusts `u` at tilt `gamma`.
pub fn applied_wrench(
    params: &PlatformParams,
    gamma: &TiltVector,
    u: &[f64],
) -> Result<(Vec3, Vec3, Vec<f64>), ParamsError> {
    let maps = build_allocation_maps(params, gamma)?;
    let u = DVector::from_column_slice(u);
    let w = maps.wrench(&u);
    Ok((w.force, w.torque, maps.joint_torques(&u).as_slice().to_vec()))
}
