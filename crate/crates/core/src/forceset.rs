//! The hoverable force set (HFS) and the required force set (RFS).
//!
//! The HFS at a tilt configuration is the set of payload forces the rotors
//! can produce, with every thrust in `[0, u_max]`, while the payload torque and
//! every hinge torque are exactly zero. The hinges are passive, so a nonzero
//! joint torque would move the tilt and the platform would not stay in
//! hover. The set is the image of a box slice in 4N dimensions and is never
//! built explicitly: every query below is one linear program.
//!
//! Membership of a force `v` is decided by the smallest normalized thrust
//! excursion that produces it,
//!
//! ```text
//! min ‖ũ‖∞   s.t.  [v; 0; 0] = [M_f; M_τ; M_γ] u,   ũ = (2 / u_max) (u - u_max/2 · 1)
//! ```
//!
//! and `v` belongs to the HFS exactly when that minimum is at most one.

use nalgebra::DVector;

use crate::geom::{MatDyn, Vec3};
use crate::lp::{minimize_linf, solve, LpError, LpProblem, LpStatus};
use crate::platform::{build_allocation_maps, AllocationMaps, ParamsError, PlatformParams, TiltVector};

/// Slack on the `‖ũ‖∞ ≤ 1` test.
pub const MEM_TOL: f64 = 1e-7;

/// Required force set given by its vertices, payload frame [N].
#[derive(Debug, Clone, PartialEq)]
pub struct RfsSpec {
    vertices: Vec<Vec3>,
}

impl RfsSpec {
    pub fn new(vertices: Vec<Vec3>) -> Self {
        Self { vertices }
    }

    /// Axis-aligned cuboid, vertices in Cartesian-product order
    /// `{x-h, x+h} × {y-h, y+h} × {z-h, z+h}`.
    pub fn cuboid(center: Vec3, half_width: f64) -> Self {
        let mut vertices = Vec::with_capacity(8);
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    vertices.push(center + half_width * Vec3::new(sx, sy, sz));
                }
            }
        }
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// `N_R`.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// True when the vertices span a solid (four affinely independent points).
    pub fn is_solid(&self) -> bool {
        let Some(v0) = self.vertices.first() else {
            return false;
        };
        let diffs: Vec<_> = self.vertices[1..].iter().map(|v| v - v0).collect();
        if diffs.len() < 3 {
            return false;
        }
        let m = MatDyn::from_fn(3, diffs.len(), |i, j| diffs[j][i]);
        crate::geom::rank(&m, 1e-9) == 3
    }
}

/// Membership machinery for the HFS at one tilt configuration.
#[derive(Debug, Clone)]
pub struct HfsQuery {
    maps: AllocationMaps,
    u_max: f64,
    /// `(u_max/2) M_all`
    scaled: MatDyn,
    /// `(u_max/2) M_all 1`
    offset: DVector<f64>,
}

/// Outcome of a membership test.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub included: bool,
    /// Optimal `‖ũ‖∞`; infinite when no thrust vector produces the force.
    pub linf: f64,
    /// The minimizing rotor thrusts (physical units) when the LP was feasible.
    pub thrusts: Option<Vec<f64>>,
}

impl HfsQuery {
    pub fn new(maps: AllocationMaps, u_max: f64) -> Self {
        let scaled = &maps.m_all * (0.5 * u_max);
        let offset = &scaled * DVector::from_element(maps.n_rotors(), 1.0);
        Self {
            maps,
            u_max,
            scaled,
            offset,
        }
    }

    pub fn at(params: &PlatformParams, gamma: &TiltVector) -> Result<Self, ParamsError> {
        Ok(Self::new(build_allocation_maps(params, gamma)?, params.u_max))
    }

    pub fn maps(&self) -> &AllocationMaps {
        &self.maps
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    /// Right-hand side `[v; 0; 0] − offset` in normalized variables.
    fn rhs(&self, v: &Vec3) -> Vec<f64> {
        (0..self.offset.len())
            .map(|i| if i < 3 { v[i] } else { 0.0 } - self.offset[i])
            .collect()
    }

    pub fn membership(&self, v: &Vec3) -> Result<Membership, LpError> {
        let n = self.maps.n_rotors();
        let b = self.rhs(v);
        let sol = minimize_linf(&self.scaled, &b, &vec![f64::NEG_INFINITY; n], &vec![f64::INFINITY; n])?;
        if sol.status != LpStatus::Optimal {
            return Ok(Membership {
                included: false,
                linf: f64::INFINITY,
                thrusts: None,
            });
        }
        let thrusts = sol.x.iter().map(|ut| 0.5 * self.u_max * (ut + 1.0)).collect();
        Ok(Membership {
            included: sol.value <= 1.0 + MEM_TOL,
            linf: sol.value,
            thrusts: Some(thrusts),
        })
    }

    /// Same verdict as [`membership`](Self::membership)`.included`, decided
    /// by a feasibility problem over the box `‖ũ‖∞ ≤ 1 + MEM_TOL` instead of
    /// the full minimization. Several times cheaper.
    pub fn contains(&self, v: &Vec3) -> Result<bool, LpError> {
        let n = self.maps.n_rotors();
        let b = self.rhs(v);
        let sol = solve(&LpProblem {
            cost: vec![0.0; n],
            a_eq: self.scaled.clone(),
            b_eq: b,
            lower: vec![-1.0 - MEM_TOL; n],
            upper: vec![1.0 + MEM_TOL; n],
        })?;
        Ok(sol.status == LpStatus::Optimal)
    }

    /// The platform can hover against `f_eq` at this tilt. The rank condition
    /// on `[M_f; M_τ]` holds for every tilt and is not rechecked here.
    pub fn hoverable(&self, f_eq: &Vec3) -> Result<bool, LpError> {
        self.contains(f_eq)
    }

    /// Number of RFS vertices inside the HFS.
    pub fn count_included(&self, rfs: &RfsSpec) -> Result<usize, LpError> {
        let mut count = 0;
        for v in rfs.vertices() {
            if self.contains(v)? {
                count += 1;
            }
        }
        Ok(count)
    }

    /// For each direction `d`, the HFS point maximizing `dᵀ f`. Their convex
    /// hull is an inner approximation of the HFS.
    pub fn support_points(&self, directions: &[Vec3]) -> Result<Vec<Vec3>, LpError> {
        let n = self.maps.n_rotors();
        directions
            .iter()
            .map(|d| {
                let gain = self.maps.m_f.transpose() * d;
                let sol = solve(&LpProblem {
                    cost: gain.iter().map(|g| -g).collect(),
                    a_eq: self.maps.m_all.rows(3, self.maps.m_all.nrows() - 3).into_owned(),
                    b_eq: vec![0.0; self.maps.m_all.nrows() - 3],
                    lower: vec![0.0; n],
                    upper: vec![self.u_max; n],
                })?;
                debug_assert_eq!(sol.status, LpStatus::Optimal);
                let f = &self.maps.m_f * DVector::from_vec(sol.x);
                Ok(Vec3::new(f[0], f[1], f[2]))
            })
            .collect()
    }
}

/// `n` nearly uniform unit vectors on the sphere (golden-angle spiral).
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}
