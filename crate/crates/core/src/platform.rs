//! Platform geometry and the thrust maps from the 4N rotor thrusts to the
//! payload wrench and the hinge-joint torques.
//!
//! Frames: the payload frame sits at the platform CoG. UAV `i` sits at
//! `R_z(α_i) [ℓ_i, 0, 0]` and its hinge axis `X_q` is orthogonal to the arm, so
//! at zero tilt `Y_q` points back at the payload origin and `Z_q` is parallel
//! to `Z_p`. The UAV orientation is `R_z(α_i + π/2) R_x(γ_i)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DVector, Vector6};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geom::{adjoint_transpose, inverse_pose, rot_x, rot_z, Mat3, MatDyn, Vec3};

/// Rotors per UAV.
pub const ROTORS_PER_UAV: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("parameter `{0}` must be strictly positive")]
    NotPositive(&'static str),
    #[error("parameter `{name}` has {got} entries, expected {expected}")]
    Length {
        name: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("inertia matrix must be symmetric positive definite")]
    Inertia,
    #[error("arm angles {0} and {1} coincide")]
    DuplicateArmAngle(usize, usize),
    #[error("tilt angle {index} is {value}, must be finite with |γ| ≤ π/2")]
    Tilt { index: usize, value: f64 },
}

/// Physical constants of the platform. Defaults are the four-UAV reference
/// build (2.5 kg payload platform, 0.22 m arms, 4 N rotors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatformParams {
    pub n_uavs: usize,
    /// Total mass [kg].
    pub mass: f64,
    /// Payload inertia in the payload frame [kg m²].
    pub inertia: [[f64; 3]; 3],
    /// Hinge-axis inertia of each UAV [kg m²].
    pub joint_inertia: Vec<f64>,
    /// Distance from the payload origin to each UAV [m].
    pub arm_length: Vec<f64>,
    /// Angle of each arm from `X_p` [rad].
    pub arm_angle: Vec<f64>,
    /// Rotor offset inside a UAV, rotors sit at `[±r, ±r, 0]` [m].
    pub rotor_offset: f64,
    /// Rotor drag torque per unit thrust.
    pub drag_ratio: f64,
    /// Maximum thrust of a single rotor [N].
    pub u_max: f64,
    pub gravity: f64,
}

impl Default for PlatformParams {
    fn default() -> Self {
        let n = 4;
        Self {
            n_uavs: n,
            mass: 2.5,
            inertia: [[0.05, 0.0, 0.0], [0.0, 0.05, 0.0], [0.0, 0.0, 0.05]],
            joint_inertia: vec![0.005; n],
            arm_length: vec![0.22; n],
            arm_angle: (0..n).map(|i| i as f64 * FRAC_PI_2).collect(),
            rotor_offset: 0.08,
            drag_ratio: 0.011,
            u_max: 4.0,
            gravity: 9.81,
        }
    }
}

impl PlatformParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        let n = self.n_uavs;
        if n == 0 {
            return Err(ParamsError::NotPositive("n_uavs"));
        }
        for (name, v) in [
            ("mass", self.mass),
            ("rotor_offset", self.rotor_offset),
            ("drag_ratio", self.drag_ratio),
            ("u_max", self.u_max),
            ("gravity", self.gravity),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ParamsError::NotPositive(name));
            }
        }
        for (name, v) in [
            ("joint_inertia", &self.joint_inertia),
            ("arm_length", &self.arm_length),
            ("arm_angle", &self.arm_angle),
        ] {
            if v.len() != n {
                return Err(ParamsError::Length {
                    name,
                    got: v.len(),
                    expected: n,
                });
            }
        }
        if self
            .joint_inertia
            .iter()
            .chain(&self.arm_length)
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(ParamsError::NotPositive("joint_inertia/arm_length"));
        }
        let j = self.inertia_matrix();
        if (j - j.transpose()).abs().max() > 1e-12 || j.cholesky().is_none() {
            return Err(ParamsError::Inertia);
        }
        for a in 0..n {
            for b in a + 1..n {
                if angle_distance(self.arm_angle[a], self.arm_angle[b]) < 1e-9 {
                    return Err(ParamsError::DuplicateArmAngle(a, b));
                }
            }
        }
        Ok(())
    }

    pub fn inertia_matrix(&self) -> Mat3 {
        let j = &self.inertia;
        Mat3::new(
            j[0][0], j[0][1], j[0][2], j[1][0], j[1][1], j[1][2], j[2][0], j[2][1], j[2][2],
        )
    }

    pub fn n_rotors(&self) -> usize {
        self.n_uavs * ROTORS_PER_UAV
    }

    /// Gravity-compensating thrust, `m g`.
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    /// Orientation and position of UAV `i` in the payload frame.
    pub fn uav_pose(&self, i: usize, gamma: f64) -> (Mat3, Vec3) {
        let alpha = self.arm_angle[i];
        let r = rot_z(alpha + FRAC_PI_2) * rot_x(gamma);
        let p = rot_z(alpha) * Vec3::new(self.arm_length[i], 0.0, 0.0);
        (r, p)
    }

    /// True for the evenly spaced four-UAV layout with identical arms, the
    /// case where the table builder can complete a grid by symmetry.
    pub fn has_four_fold_symmetry(&self) -> bool {
        self.n_uavs == 4
            && self
                .arm_angle
                .iter()
                .enumerate()
                .all(|(i, a)| angle_distance(*a, i as f64 * FRAC_PI_2) < 1e-12)
            && self.arm_length.iter().all(|l| *l == self.arm_length[0])
            && self.joint_inertia.iter().all(|j| *j == self.joint_inertia[0])
    }

    /// Stable content hash used to tie persisted tables to a parameter set.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("params serialize");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Tilt angles of the hinge joints, one per UAV [rad].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TiltVector(Vec<f64>);

impl TiltVector {
    pub fn new(angles: Vec<f64>) -> Result<Self, ParamsError> {
        for (index, &value) in angles.iter().enumerate() {
            if !value.is_finite() || value.abs() > FRAC_PI_2 {
                return Err(ParamsError::Tilt { index, value });
            }
        }
        Ok(Self(angles))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn uniform(n: usize, gamma: f64) -> Result<Self, ParamsError> {
        Self::new(vec![gamma; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, g| m.max(g.abs()))
    }
}

impl std::ops::Index<usize> for TiltVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Payload wrench in the payload frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
}

/// Thrust maps evaluated at one tilt configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationMaps {
    /// Rotor thrusts to payload force, 3 × 4N.
    pub m_f: MatDyn,
    /// Rotor thrusts to payload torque, 3 × 4N.
    pub m_tau: MatDyn,
    /// Rotor thrusts to joint torques, N × 4N.
    pub m_gamma: MatDyn,
    /// `[M_f; M_τ; M_γ]`, (6 + N) × 4N.
    pub m_all: MatDyn,
}

impl AllocationMaps {
    pub fn n_rotors(&self) -> usize {
        self.m_f.ncols()
    }

    /// `[M_f; M_τ]`, the map whose rank decides local controllability.
    pub fn wrench_map(&self) -> MatDyn {
        self.m_all.rows(0, 6).into_owned()
    }

    pub fn wrench(&self, u: &DVector<f64>) -> Wrench {
        let f = &self.m_f * u;
        let t = &self.m_tau * u;
        Wrench {
            force: Vec3::new(f[0], f[1], f[2]),
            torque: Vec3::new(t[0], t[1], t[2]),
        }
    }

    pub fn joint_torques(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.m_gamma * u
    }
}

/// Wrench of one UAV in its own frame as a linear map of its four rotor
/// thrusts. Rotors alternate spin direction, hence the drag-torque pattern.
pub fn uav_wrench_matrix(params: &PlatformParams) -> MatDyn {
    let r = params.rotor_offset;
    let k = params.drag_ratio;
    #[rustfmt::skip]
    let rows = [
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        1.0, 1.0, 1.0, 1.0,
        r, r, -r, -r,
        -r, r, r, -r,
        k, -k, k, -k,
    ];
    MatDyn::from_row_slice(6, 4, &rows)
}

/// Hinge torque contained in a UAV wrench: the torque about `X_q`.
pub fn joint_torque_row(uav_wrench: &Vector6<f64>) -> f64 {
    uav_wrench[3]
}

pub fn build_allocation_maps(params: &PlatformParams, gamma: &TiltVector) -> Result<AllocationMaps, ParamsError> {
    let n = params.n_uavs;
    if gamma.len() != n {
        return Err(ParamsError::Length {
            name: "gamma",
            got: gamma.len(),
            expected: n,
        });
    }
    if let Some((index, &value)) = gamma
        .as_slice()
        .iter()
        .enumerate()
        .find(|(_, g)| !g.is_finite() || g.abs() > FRAC_PI_2)
    {
        return Err(ParamsError::Tilt { index, value });
    }

    let w = uav_wrench_matrix(params);
    // The hinge axis carries no load into the payload.
    let mut masked = w.clone();
    masked.row_mut(3).fill(0.0);

    let cols = params.n_rotors();
    let mut m_all = MatDyn::zeros(6 + n, cols);
    for i in 0..n {
        let (r, p) = params.uav_pose(i, gamma[i]);
        let (ri, pi) = inverse_pose(&r, &p);
        let block = adjoint_transpose(&ri, &pi) * &masked;
        m_all
            .view_mut((0, ROTORS_PER_UAV * i), (6, ROTORS_PER_UAV))
            .copy_from(&block);
        m_all
            .view_mut((6 + i, ROTORS_PER_UAV * i), (1, ROTORS_PER_UAV))
            .copy_from(&w.row(3));
    }
    Ok(AllocationMaps {
        m_f: m_all.rows(0, 3).into_owned(),
        m_tau: m_all.rows(3, 3).into_owned(),
        m_gamma: m_all.rows(6, n).into_owned(),
        m_all,
    })
}

/// Force the rotors must supply to hold the payload still at attitude
/// `r_wp` against gravity and a world-frame disturbance, in the payload frame.
pub fn equilibrium_force(params: &PlatformParams, r_wp: &Mat3, disturbance_w: &Vec3) -> Vec3 {
    r_wp.transpose() * (Vec3::new(0.0, 0.0, params.weight()) - disturbance_w)
}
