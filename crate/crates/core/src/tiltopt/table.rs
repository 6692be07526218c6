//! The offline tilt table: optimized tilt vectors over a grid of required
//! force set centers `(f_cx, f_cy, m g)`, and its file format.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{is_certified, objective, optimize, OptimConfig, OptimError};
use crate::forceset::RfsSpec;
use crate::geom::Vec3;
use crate::platform::{PlatformParams, TiltVector};

pub const TABLE_VERSION: u32 = 1;
const FORMAT: &str = "tiltshape-table";
const SPACING_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("grid spec `{0}`: expected \"x0:x1:step,y0:y1:step\" with step > 0 and x0 ≤ x1")]
    GridSyntax(String),
    #[error("cannot access table file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed table file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported table format `{format}` version {version}")]
    Version { format: String, version: u32 },
    #[error("inconsistent table: {0}")]
    Invalid(String),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

/// `start, start + step, …` up to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x: GridAxis,
    pub y: GridAxis,
}

impl GridSpec {
    /// 11 × 11 centers over `[0, 1]²` N.
    pub fn quadrant_default() -> Self {
        let a = GridAxis {
            start: 0.0,
            stop: 1.0,
            step: 0.1,
        };
        Self { x: a, y: a }
    }

    /// 3 × 3 centers `{0, 0.5, 1}²` N.
    pub fn coarse() -> Self {
        let a = GridAxis {
            start: 0.0,
            stop: 1.0,
            step: 0.5,
        };
        Self { x: a, y: a }
    }
}

impl std::str::FromStr for GridSpec {
    type Err = TableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TableError::GridSyntax(s.to_string());
        let axis = |part: &str| -> Result<GridAxis, TableError> {
            let v: Vec<f64> = part
                .split(':')
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            match v[..] {
                [start, stop, step] if step > 0.0 && start <= stop && start.is_finite() && stop.is_finite() => {
                    Ok(GridAxis { start, stop, step })
                }
                _ => Err(bad()),
            }
        };
        let (x, y) = s.split_once(',').ok_or_else(bad)?;
        Ok(Self {
            x: axis(x)?,
            y: axis(y)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub gamma: TiltVector,
    pub objective: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiltTable {
    pub format: String,
    pub version: u32,
    /// Content hash of the platform parameters the table was built for.
    pub params_hash: String,
    pub axis_x: Vec<f64>,
    pub axis_y: Vec<f64>,
    /// Vertical component shared by every center [N].
    pub f_cz: f64,
    pub gamma_max: f64,
    pub epsilon: f64,
    pub half_width: f64,
    pub n_vertices: usize,
    /// Row-major: the entry for `(axis_x[ix], axis_y[iy])` is at `ix * ny + iy`.
    pub entries: Vec<TableEntry>,
}

impl TiltTable {
    pub fn entry(&self, ix: usize, iy: usize) -> &TableEntry {
        &self.entries[ix * self.axis_y.len() + iy]
    }

    pub fn n_cells(&self) -> usize {
        self.entries.len()
    }

    pub fn n_uavs(&self) -> usize {
        self.entries.first().map_or(0, |e| e.gamma.len())
    }

    pub fn certified_count(&self) -> usize {
        self.entries.iter().filter(|e| e.certified).count()
    }

    pub fn all_certified(&self) -> bool {
        self.certified_count() == self.n_cells()
    }

    pub fn max_abs_gamma(&self) -> f64 {
        self.entries.iter().map(|e| e.gamma.max_abs()).fold(0.0, f64::max)
    }

    /// True when `(fx, fy)` lies inside the table's rectangle.
    pub fn covers(&self, fx: f64, fy: f64) -> bool {
        let (x0, x1) = (self.axis_x[0], *self.axis_x.last().unwrap());
        let (y0, y1) = (self.axis_y[0], *self.axis_y.last().unwrap());
        (x0 - SPACING_TOL..=x1 + SPACING_TOL).contains(&fx) && (y0 - SPACING_TOL..=y1 + SPACING_TOL).contains(&fy)
    }

    /// Required force set around the center of cell `(ix, iy)`.
    pub fn cell_rfs(&self, ix: usize, iy: usize) -> RfsSpec {
        RfsSpec::cuboid(Vec3::new(self.axis_x[ix], self.axis_y[iy], self.f_cz), self.half_width)
    }

    pub fn validate(&self) -> Result<(), TableError> {
        if self.format != FORMAT || self.version != TABLE_VERSION {
            return Err(TableError::Version {
                format: self.format.clone(),
                version: self.version,
            });
        }
        for (name, axis) in [("axis_x", &self.axis_x), ("axis_y", &self.axis_y)] {
            check_axis(name, axis)?;
        }
        if self.entries.len() != self.axis_x.len() * self.axis_y.len() {
            return Err(TableError::Invalid(format!(
                "{} entries for a {}×{} grid",
                self.entries.len(),
                self.axis_x.len(),
                self.axis_y.len()
            )));
        }
        let n = self.n_uavs();
        for (k, e) in self.entries.iter().enumerate() {
            if e.gamma.len() != n || e.gamma.max_abs() > self.gamma_max {
                return Err(TableError::Invalid(format!("entry {k} has an invalid tilt vector")));
            }
            if e.certified != is_certified(e.objective, self.n_vertices) {
                return Err(TableError::Invalid(format!(
                    "entry {k}: certified flag disagrees with objective {}",
                    e.objective
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, TableError> {
        let t: Self = serde_json::from_str(s)?;
        t.validate()?;
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<(), TableError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TableError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<(), TableError> {
    if axis.is_empty() {
        return Err(TableError::Invalid(format!("{name} is empty")));
    }
    if axis.len() > 1 {
        let step = axis[1] - axis[0];
        for w in axis.windows(2) {
            let d = w[1] - w[0];
            if !(d > 0.0) || (d - step).abs() > SPACING_TOL * step.abs().max(1.0) {
                return Err(TableError::Invalid(format!("{name} is not uniformly increasing")));
            }
        }
    }
    Ok(())
}

/// Tilt vector for the platform mirrored across the payload `Y` axis
/// (`x → −x`): UAV `i` takes the place of UAV `(2 − i) mod 4`.
pub fn mirror_x(g: &TiltVector) -> TiltVector {
    permute(g, |i| (6 - i) % 4)
}

/// Mirror across the payload `X` axis (`y → −y`): UAVs 2 and 4 swap.
pub fn mirror_y(g: &TiltVector) -> TiltVector {
    permute(g, |i| (4 - i) % 4)
}

/// Quarter turn about `Z_p`, mapping a solution at `(x, y)` to `(−y, x)`.
pub fn quarter_turn(g: &TiltVector) -> TiltVector {
    permute(g, |i| (i + 1) % 4)
}

fn permute(g: &TiltVector, dest: impl Fn(usize) -> usize) -> TiltVector {
    let mut out = vec![0.0; g.len()];
    for (i, v) in g.as_slice().iter().enumerate() {
        out[dest(i)] = *v;
    }
    TiltVector::new(out).expect("permutation keeps angles valid")
}

/// Optimizes one tilt vector per grid center.
///
/// For the four-fold symmetric layout with a grid starting at the origin,
/// only the given nonnegative quadrant is optimized; the other three are
/// filled in by mirroring and every mirrored entry is recounted directly.
/// An entry that does not reproduce its source's count is re-optimized.
/// Otherwise every cell of the grid is optimized as given.
pub fn build_table(params: &PlatformParams, grid: &GridSpec, cfg: &OptimConfig) -> Result<TiltTable, TableError> {
    params.validate().map_err(OptimError::from)?;
    cfg.validate()?;
    let qx = grid.x.values();
    let qy = grid.y.values();
    let fz = params.weight();
    let rfs_at = |x: f64, y: f64| RfsSpec::cuboid(Vec3::new(x, y, fz), cfg.rfs_half_width);
    let solve_cell = |x: f64, y: f64| -> Result<(TableEntry, usize), OptimError> {
        let r = optimize(params, &rfs_at(x, y), cfg)?;
        let entry = TableEntry {
            gamma: r.gamma,
            objective: r.objective.value(),
            certified: r.certified,
        };
        Ok((entry, r.objective.included))
    };

    let complete = params.has_four_fold_symmetry() && qx[0] == 0.0 && qy[0] == 0.0;
    let cells: Vec<(f64, f64)> = qx.iter().flat_map(|&x| qy.iter().map(move |&y| (x, y))).collect();
    let quadrant: Vec<(TableEntry, usize)> = cells
        .par_iter()
        .map(|&(x, y)| solve_cell(x, y))
        .collect::<Result<_, _>>()?;

    let (axis_x, axis_y, entries) = if complete {
        let full = |q: &[f64]| -> Vec<f64> { q[1..].iter().rev().map(|v| -v).chain(q.iter().copied()).collect() };
        let (fx, fy) = (full(&qx), full(&qy));
        let (ox, oy) = (qx.len() - 1, qy.len() - 1);
        let full_cells: Vec<(usize, usize)> = (0..fx.len()).flat_map(|i| (0..fy.len()).map(move |j| (i, j))).collect();
        let entries = full_cells
            .par_iter()
            .map(|&(i, j)| -> Result<TableEntry, OptimError> {
                let (si, sj) = (i.abs_diff(ox), j.abs_diff(oy));
                let (src, src_count) = &quadrant[si * qy.len() + sj];
                if i >= ox && j >= oy {
                    return Ok(src.clone());
                }
                let mut gamma = src.gamma.clone();
                if i < ox {
                    gamma = mirror_x(&gamma);
                }
                if j < oy {
                    gamma = mirror_y(&gamma);
                }
                let rfs = rfs_at(fx[i], fy[j]);
                let o = objective(params, &gamma, &rfs, cfg)?;
                if o.included < *src_count {
                    return Ok(solve_cell(fx[i], fy[j])?.0);
                }
                Ok(TableEntry {
                    gamma,
                    objective: o.value(),
                    certified: is_certified(o.value(), rfs.len()),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        (fx, fy, entries)
    } else {
        (qx, qy, quadrant.into_iter().map(|(e, _)| e).collect())
    };

    let table = TiltTable {
        format: FORMAT.to_string(),
        version: TABLE_VERSION,
        params_hash: params.content_hash(),
        axis_x,
        axis_y,
        f_cz: fz,
        gamma_max: cfg.gamma_max,
        epsilon: cfg.epsilon,
        half_width: cfg.rfs_half_width,
        n_vertices: 8,
        entries,
    };
    table.validate()?;
    Ok(table)
}
