//! Bicubic Catmull-Rom interpolation of the tilt table.
//!
//! Outside the outermost nodes the spline needs one extra node per side; it
//! is taken on the straight line through the last two nodes. Queries outside
//! the table rectangle are clamped onto it.

use crate::tiltopt::TiltTable;

/// Per-joint spline over a [`TiltTable`].
#[derive(Debug, Clone)]
pub struct TableInterpolator {
    x0: f64,
    y0: f64,
    hx: f64,
    hy: f64,
    nx: usize,
    ny: usize,
    /// `values[joint][ix * ny + iy]`
    values: Vec<Vec<f64>>,
}

/// Knot offsets within this fraction of a cell snap onto the knot, so grid
/// nodes are reproduced exactly.
const SNAP: f64 = 1e-9;

impl TableInterpolator {
    pub fn new(table: &TiltTable) -> Self {
        let (nx, ny) = (table.axis_x.len(), table.axis_y.len());
        let step = |a: &[f64]| {
            if a.len() > 1 {
                (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64
            } else {
                1.0
            }
        };
        let values = (0..table.n_uavs())
            .map(|j| table.entries.iter().map(|e| e.gamma[j]).collect())
            .collect();
        Self {
            x0: table.axis_x[0],
            y0: table.axis_y[0],
            hx: step(&table.axis_x),
            hy: step(&table.axis_y),
            nx,
            ny,
            values,
        }
    }

    pub fn n_joints(&self) -> usize {
        self.values.len()
    }

    /// Interpolated tilt vector at `(fx, fy)`.
    pub fn eval(&self, fx: f64, fy: f64) -> Vec<f64> {
        let (ix, tx) = locate(fx, self.x0, self.hx, self.nx);
        let (iy, ty) = locate(fy, self.y0, self.hy, self.ny);
        let wx = catmull_rom_weights(tx);
        let wy = catmull_rom_weights(ty);
        self.values
            .iter()
            .map(|v| {
                let mut acc = 0.0;
                for (a, wa) in wx.iter().enumerate() {
                    let mut col = 0.0;
                    for (b, wb) in wy.iter().enumerate() {
                        if *wb != 0.0 {
                            col += wb * self.node(v, ix + a as isize - 1, iy + b as isize - 1);
                        }
                    }
                    if *wa != 0.0 {
                        acc += wa * col;
                    }
                }
                acc
            })
            .collect()
    }

    /// Node value with linear extension beyond the grid in each direction.
    fn node(&self, v: &[f64], i: isize, j: isize) -> f64 {
        let at = |i: usize, j: usize| v[i * self.ny + j];
        let ext = |k: isize, n: usize, get: &dyn Fn(usize) -> f64| -> f64 {
            if n == 1 {
                return get(0);
            }
            if k < 0 {
                get(0) + k as f64 * (get(1) - get(0))
            } else if k as usize >= n {
                get(n - 1) + (k as usize - (n - 1)) as f64 * (get(n - 1) - get(n - 2))
            } else {
                get(k as usize)
            }
        };
        ext(i, self.nx, &|ii| ext(j, self.ny, &|jj| at(ii, jj)))
    }
}

/// Cell index and local coordinate in `[0, 1)`, query clamped to the grid.
fn locate(x: f64, x0: f64, h: f64, n: usize) -> (isize, f64) {
    if n == 1 {
        return (0, 0.0);
    }
    let s = ((x - x0) / h).clamp(0.0, (n - 1) as f64);
    let mut i = s.floor();
    let mut t = s - i;
    if t > 1.0 - SNAP {
        i += 1.0;
        t = 0.0;
    } else if t < SNAP {
        t = 0.0;
    }
    (i as isize, t)
}

/// Weights of the nodes `i−1, i, i+1, i+2` at local coordinate `t`.
fn catmull_rom_weights(t: f64) -> [f64; 4] {
    if t == 0.0 {
        return [0.0, 1.0, 0.0, 0.0];
    }
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t + 2.0 * t2 - t3),
        0.5 * (2.0 - 5.0 * t2 + 3.0 * t3),
        0.5 * (t + 4.0 * t2 - 3.0 * t3),
        0.5 * (-t2 + t3),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platform::TiltVector;
    use crate::tiltopt::{TableEntry, TABLE_VERSION};

    fn table_from(f: impl Fn(f64, f64) -> f64) -> TiltTable {
        let axis_x = vec![-1.0, -0.5, 0.0, 0.5, 1.0];
        let axis_y = vec![-1.0, 0.0, 1.0];
        let mut entries = vec![];
        for &x in &axis_x {
            for &y in &axis_y {
                let v = f(x, y);
                entries.push(TableEntry {
                    gamma: TiltVector::new(vec![v, -v]).unwrap(),
                    objective: -7.5,
                    certified: true,
                });
            }
        }
        TiltTable {
            format: "tiltshape-table".into(),
            version: TABLE_VERSION,
            params_hash: String::new(),
            axis_x,
            axis_y,
            f_cz: 24.525,
            gamma_max: 1.0,
            epsilon: 1e-6,
            half_width: 1.0,
            n_vertices: 8,
            entries,
        }
    }

    #[test]
    fn knots_are_reproduced_exactly() {
        let t = table_from(|x, y| 0.3 * x * x - 0.1 * y + 0.05 * x * y);
        let it = TableInterpolator::new(&t);
        for (ix, &x) in t.axis_x.iter().enumerate() {
            for (iy, &y) in t.axis_y.iter().enumerate() {
                let g = it.eval(x, y);
                assert_eq!(g[0], t.entry(ix, iy).gamma[0]);
                assert_eq!(g[1], t.entry(ix, iy).gamma[1]);
            }
        }
    }

    #[test]
    fn bilinear_data_is_reproduced_everywhere() {
        // Catmull-Rom with linear end extension is exact on linear data.
        let f = |x: f64, y: f64| 0.2 + 0.3 * x - 0.1 * y + 0.05 * x * y;
        let it = TableInterpolator::new(&table_from(f));
        for k in 0..50 {
            let x = -1.0 + 2.0 * (k as f64 * 0.618).fract();
            let y = -1.0 + 2.0 * (k as f64 * 0.377).fract();
            assert!((it.eval(x, y)[0] - f(x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn queries_are_clamped() {
        let f = |x: f64, y: f64| 0.2 * x + 0.4 * y;
        let it = TableInterpolator::new(&table_from(f));
        assert!((it.eval(5.0, -3.0)[0] - f(1.0, -1.0)).abs() < 1e-12);
        assert!((it.eval(-5.0, 3.0)[1] + f(-1.0, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn interpolant_is_continuous_across_cells() {
        let it = TableInterpolator::new(&table_from(|x, y| (3.0 * x).sin() * y.cos()));
        for &x in &[-0.5, 0.0, 0.5] {
            let l = it.eval(x - 1e-9, 0.3)[0];
            let r = it.eval(x + 1e-9, 0.3)[0];
            assert!((l - r).abs() < 1e-7);
        }
    }

    #[test]
    fn weights_partition_unity() {
        for k in 0..=10 {
            let w = catmull_rom_weights(k as f64 / 10.0);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }
}
