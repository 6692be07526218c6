//! Offline tilt-angle optimization.
//!
//! For a required force set with `N_R` vertices the tilt vector is chosen by
//!
//! ```text
//! γ* = argmin  −|V_R ∩ F_H(γ)| + ‖γ‖² / (N γ_max² + ε)   s.t. |γ_i| ≤ γ_max
//! ```
//!
//! The penalty is always below one, so an objective below `−N_R + 1` can only
//! come from a tilt at which every vertex is included: that is the
//! certificate reported with each result. The objective is piecewise
//! constant in the count and is minimized by particle swarm.

pub mod pso;
mod table;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forceset::{HfsQuery, RfsSpec};
use crate::lp::LpError;
use crate::platform::{ParamsError, PlatformParams, TiltVector};

pub use pso::PsoConfig;
pub use table::{
    build_table, mirror_x, mirror_y, quarter_turn, GridAxis, GridSpec, TableEntry, TableError, TiltTable, TABLE_VERSION,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("invalid optimizer setting: {0}")]
    Config(String),
    #[error("tilt {value} at joint {index} is outside ±γ_max = {gamma_max}")]
    OutOfBox { index: usize, value: f64, gamma_max: f64 },
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimConfig {
    /// Tilt bound [rad].
    pub gamma_max: f64,
    /// Keeps the penalty strictly below one.
    pub epsilon: f64,
    /// Half width of the cuboid required force set around each grid center [N].
    pub rfs_half_width: f64,
    pub pso: PsoConfig,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            gamma_max: FRAC_PI_4,
            epsilon: 1e-6,
            rfs_half_width: 1.0,
            pso: PsoConfig::default(),
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if !(self.gamma_max > 0.0 && self.gamma_max <= FRAC_PI_2) {
            return Err(OptimError::Config(format!(
                "gamma_max = {} not in (0, π/2]",
                self.gamma_max
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(OptimError::Config(format!(
                "epsilon = {} must be positive",
                self.epsilon
            )));
        }
        if !(self.rfs_half_width >= 0.0 && self.rfs_half_width.is_finite()) {
            return Err(OptimError::Config(format!(
                "rfs_half_width = {} must be nonnegative",
                self.rfs_half_width
            )));
        }
        let p = &self.pso;
        if p.particles == 0 || p.iterations == 0 {
            return Err(OptimError::Config(
                "pso particles and iterations must be at least 1".into(),
            ));
        }
        if ![p.inertia, p.cognitive, p.social]
            .iter()
            .all(|c| c.is_finite() && *c >= 0.0)
        {
            return Err(OptimError::Config(
                "pso coefficients must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// The two terms of the objective at one tilt vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    /// Vertices of the required set inside the HFS.
    pub included: usize,
    /// `‖γ‖² / (N γ_max² + ε)`, in `[0, 1)`.
    pub penalty: f64,
}

impl Objective {
    pub fn value(&self) -> f64 {
        -(self.included as f64) + self.penalty
    }
}

/// Certificate test: every vertex is included whenever this holds.
pub fn is_certified(objective: f64, n_vertices: usize) -> bool {
    objective < -(n_vertices as f64) + 1.0
}

pub fn penalty(gamma: &TiltVector, cfg: &OptimConfig) -> f64 {
    gamma.norm_squared() / (gamma.len() as f64 * cfg.gamma_max.powi(2) + cfg.epsilon)
}

pub fn objective(
    params: &PlatformParams,
    gamma: &TiltVector,
    rfs: &RfsSpec,
    cfg: &OptimConfig,
) -> Result<Objective, OptimError> {
    for (index, &value) in gamma.as_slice().iter().enumerate() {
        if value.abs() > cfg.gamma_max {
            return Err(OptimError::OutOfBox {
                index,
                value,
                gamma_max: cfg.gamma_max,
            });
        }
    }
    let included = HfsQuery::at(params, gamma)?.count_included(rfs)?;
    let penalty = penalty(gamma, cfg);
    debug_assert!((0.0..1.0).contains(&penalty));
    debug_assert!(included <= rfs.len());
    Ok(Objective { included, penalty })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub gamma: TiltVector,
    pub objective: Objective,
    pub certified: bool,
}

/// Swarm search over `[−γ_max, γ_max]^N`. Not finding full inclusion is a
/// normal outcome reported through `certified`; errors are reserved for bad
/// configuration and solver failures.
pub fn optimize(params: &PlatformParams, rfs: &RfsSpec, cfg: &OptimConfig) -> Result<OptimResult, OptimError> {
    params.validate()?;
    cfg.validate()?;
    let n = params.n_uavs;
    let failure: Mutex<Option<OptimError>> = Mutex::new(None);
    let f = |x: &[f64]| {
        let eval = TiltVector::new(x.to_vec())
            .map_err(OptimError::from)
            .and_then(|g| objective(params, &g, rfs, cfg));
        match eval {
            Ok(o) => o.value(),
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    // The origin is always a particle: when zero tilt already includes every
    // vertex it is the exact optimum.
    let best = pso::minimize(
        f,
        &vec![-cfg.gamma_max; n],
        &vec![cfg.gamma_max; n],
        &cfg.pso,
        &[vec![0.0; n]],
    );
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let gamma = TiltVector::new(best.best)?;
    let objective = objective(params, &gamma, rfs, cfg)?;
    Ok(OptimResult {
        certified: is_certified(objective.value(), rfs.len()),
        gamma,
        objective,
    })
}
