//! Rigid-body math shared by the rest of the crate.
//!
//! Everything here works in radians and in right-handed frames. The adjoint
//! helper follows the `[force; torque]` wrench ordering used throughout.

use nalgebra::{DMatrix, Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type MatDyn = DMatrix<f64>;

/// Default relative cutoff for [`rank`].
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Rotation matrix about a principal axis.
pub fn rot_axis(axis: Axis, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    match axis {
        Axis::X => Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        Axis::Y => Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        Axis::Z => Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
    }
}

pub fn rot_x(angle: f64) -> Mat3 {
    rot_axis(Axis::X, angle)
}

pub fn rot_y(angle: f64) -> Mat3 {
    rot_axis(Axis::Y, angle)
}

pub fn rot_z(angle: f64) -> Mat3 {
    rot_axis(Axis::Z, angle)
}

/// Skew-symmetric matrix with `hat(a) * b == a.cross(&b)`.
pub fn hat(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// The transposed adjoint of the pose `(R, p)`:
///
/// ```text
/// [  Rᵀ       0  ]
/// [ -Rᵀ p̂    Rᵀ ]
/// ```
///
/// Applied to a wrench `[f; τ]` expressed in the parent frame it returns the
/// same wrench expressed in the child frame of `(R, p)`. To move a wrench the
/// other way (child to parent) use the inverse pose `(Rᵀ, -Rᵀ p)`, see
/// [`inverse_pose`].
pub fn adjoint_transpose(r: &Mat3, p: &Vec3) -> MatDyn {
    let rt = r.transpose();
    let lower = -rt * hat(p);
    let mut out = MatDyn::zeros(6, 6);
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&rt);
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&lower);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&rt);
    out
}

/// Inverse of the rigid transform `(R, p)`.
pub fn inverse_pose(r: &Mat3, p: &Vec3) -> (Mat3, Vec3) {
    let rt = r.transpose();
    let q = -(rt * p);
    (rt, q)
}

/// Numerical rank: singular values above `tol * σ_max`.
pub fn rank(m: &MatDyn, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Roll-pitch-yaw angles of `R = R_z(ψ) R_y(θ) R_x(φ)`, returned as `[φ, θ, ψ]`.
pub fn rpy_from_rotation(r: &Mat3) -> Vec3 {
    let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    Vec3::new(roll, pitch, yaw)
}

pub fn rotation_from_rpy(rpy: &Vec3) -> Mat3 {
    rot_z(rpy.z) * rot_y(rpy.y) * rot_x(rpy.x)
}

/// Projects a nearly orthonormal matrix back onto SO(3) (polar factor via SVD).
pub fn orthonormalize(r: &Mat3) -> Mat3 {
    let svd = r.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut out = u * vt;
    if out.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        out = u * vt;
    }
    out
}
