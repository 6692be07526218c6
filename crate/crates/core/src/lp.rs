//! Dense linear programming.
//!
//! A two-phase primal simplex on a full tableau, with general variable bounds
//! handled directly (nonbasic variables sit at a finite bound, or at zero when
//! free) rather than through extra rows. The entering column is the one with
//! the largest reduced cost; after a run of degenerate pivots the solver
//! switches to Bland's rule until progress resumes, which rules out cycling.
//! Every choice breaks ties by index, so results are bit-for-bit
//! deterministic.
//!
//! The problems this crate solves are small (a few dozen rows) and well
//! scaled, so dense storage and absolute tolerances are adequate.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geom::MatDyn;

/// Primal feasibility tolerance on bounds.
pub const FEAS_TOL: f64 = 1e-9;
/// Reduced-cost tolerance for optimality.
pub const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-7;
const DRIVE_OUT_TOL: f64 = 1e-7;
const TIE_TOL: f64 = 1e-12;
/// Consecutive degenerate pivots before falling back to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("problem data contains NaN")]
    NotANumber,
    #[error("variable {0} has lower bound above upper bound")]
    BadBounds(usize),
    #[error("simplex did not terminate within {0} iterations")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `min cᵀx  s.t.  A x = b,  lower ≤ x ≤ upper`; bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub a_eq: MatDyn,
    pub b_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; meaningful only when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LpProblem {
    /// Problem with `n` variables, no constraints and nonnegative bounds.
    pub fn new(cost: Vec<f64>) -> Self {
        let n = cost.len();
        Self {
            cost,
            a_eq: MatDyn::zeros(0, n),
            b_eq: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.cost.len();
        if self.a_eq.ncols() != n {
            return Err(LpError::Dimension(format!(
                "A has {} columns for {} variables",
                self.a_eq.ncols(),
                n
            )));
        }
        if self.a_eq.nrows() != self.b_eq.len() {
            return Err(LpError::Dimension(format!(
                "A has {} rows but b has {} entries",
                self.a_eq.nrows(),
                self.b_eq.len()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension("bounds length".into()));
        }
        let any_nan = self.cost.iter().any(|v| v.is_nan())
            || self.b_eq.iter().any(|v| v.is_nan())
            || self.a_eq.iter().any(|v| v.is_nan())
            || self.lower.iter().any(|v| v.is_nan())
            || self.upper.iter().any(|v| v.is_nan());
        if any_nan {
            return Err(LpError::NotANumber);
        }
        if self
            .cost
            .iter()
            .chain(&self.b_eq)
            .chain(self.a_eq.iter())
            .any(|v| v.is_infinite())
        {
            return Err(LpError::Dimension("cost, A and b must be finite".into()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(LpError::BadBounds(j));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    FreeZero,
}

struct Tableau {
    m: usize,
    /// Structural plus artificial columns.
    width: usize,
    n_struct: usize,
    /// Row-major `B⁻¹ [A | S]`.
    t: Vec<f64>,
    /// Reduced costs for the cost vector of the current phase.
    d: Vec<f64>,
    degenerate: usize,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Original `[A | S]` for recomputing basic values.
    a_full: DMatrix<f64>,
    b: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
}

enum StepResult {
    Optimal,
    Unbounded,
    Continue,
}

impl Tableau {
    fn new(p: &LpProblem) -> Self {
        let m = p.b_eq.len();
        let n = p.cost.len();
        let width = n + m;

        let mut x = vec![0.0; width];
        let mut state = vec![VarState::Basic; width];
        for j in 0..n {
            let (lo, hi) = (p.lower[j], p.upper[j]);
            (x[j], state[j]) = if lo.is_finite() {
                (lo, VarState::AtLower)
            } else if hi.is_finite() {
                (hi, VarState::AtUpper)
            } else {
                (0.0, VarState::FreeZero)
            };
        }

        let mut a_full = DMatrix::zeros(m, width);
        let mut t = vec![0.0; m * width];
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let mut resid = p.b_eq[i];
            for j in 0..n {
                resid -= p.a_eq[(i, j)] * x[j];
            }
            let sign = if resid >= 0.0 { 1.0 } else { -1.0 };
            for j in 0..n {
                a_full[(i, j)] = p.a_eq[(i, j)];
                t[i * width + j] = sign * p.a_eq[(i, j)];
            }
            a_full[(i, n + i)] = sign;
            t[i * width + n + i] = 1.0;
            x[n + i] = resid.abs();
            basis.push(n + i);
        }

        let mut lower = p.lower.clone();
        let mut upper = p.upper.clone();
        lower.extend(std::iter::repeat_n(0.0, m));
        upper.extend(std::iter::repeat_n(f64::INFINITY, m));

        Self {
            m,
            width,
            n_struct: n,
            t,
            d: vec![0.0; width],
            degenerate: 0,
            basis,
            state,
            x,
            lower,
            upper,
            a_full,
            b: p.b_eq.clone(),
            iterations: 0,
            max_iterations: 10_000 + 200 * (m + width),
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn price(&mut self, cost: &[f64]) {
        for j in 0..self.width {
            let mut d = cost[j];
            for i in 0..self.m {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    d -= cb * self.at(i, j);
                }
            }
            self.d[j] = d;
        }
    }

    /// Largest improving reduced cost, or the lowest-index improving column
    /// while in Bland mode. Returns the column and its direction of motion.
    fn entering(&self, allowed: usize) -> Option<(usize, f64)> {
        let bland = self.degenerate >= DEGENERATE_STREAK;
        let mut best: Option<(usize, f64)> = None;
        let mut best_gain = 0.0;
        for j in 0..allowed {
            let d = self.d[j];
            let dir = match self.state[j] {
                VarState::Basic => continue,
                _ if self.upper[j] <= self.lower[j] => continue,
                VarState::AtLower if d < -OPT_TOL => 1.0,
                VarState::AtUpper if d > OPT_TOL => -1.0,
                VarState::FreeZero if d.abs() > OPT_TOL => -d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_gain {
                best_gain = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn step(&mut self, allowed: usize) -> StepResult {
        let Some((q, dir)) = self.entering(allowed) else {
            return StepResult::Optimal;
        };

        // Own-bound flip.
        let flip = if self.lower[q].is_finite() && self.upper[q].is_finite() {
            self.upper[q] - self.lower[q]
        } else {
            f64::INFINITY
        };
        // Harris ratio test. Pass one finds the largest step that keeps every
        // basic variable within FEAS_TOL of its bounds; pass two picks, among
        // the rows blocking before that step, the one with the largest pivot.
        // In Bland mode the lowest basic index among exact ties wins instead.
        let bland = self.degenerate >= DEGENERATE_STREAK;
        let blocking = |i: usize| -> Option<(f64, f64, bool)> {
            let delta = -dir * self.at(i, q);
            let b = self.basis[i];
            if delta < -PIVOT_TOL && self.lower[b].is_finite() {
                Some(((self.x[b] - self.lower[b]).max(0.0), -delta, false))
            } else if delta > PIVOT_TOL && self.upper[b].is_finite() {
                Some(((self.upper[b] - self.x[b]).max(0.0), delta, true))
            } else {
                None
            }
        };
        let mut relaxed = flip;
        for i in 0..self.m {
            if let Some((slack, mag, _)) = blocking(i) {
                let tol = if bland { 0.0 } else { FEAS_TOL };
                relaxed = relaxed.min((slack + tol) / mag);
            }
        }
        let mut theta = flip;
        let mut leave: Option<(usize, bool)> = None;
        let mut best_mag = 0.0;
        for i in 0..self.m {
            let Some((slack, mag, to_upper)) = blocking(i) else {
                continue;
            };
            let lim = slack / mag;
            if lim > relaxed + TIE_TOL {
                continue;
            }
            let better = match leave {
                None => true,
                Some((r, _)) if bland => {
                    lim < theta - TIE_TOL || (lim <= theta + TIE_TOL && self.basis[i] < self.basis[r])
                }
                Some(_) => mag > best_mag,
            };
            if better {
                theta = lim;
                best_mag = mag;
                leave = Some((i, to_upper));
            }
        }
        if leave.is_none() {
            theta = flip;
        }
        if theta == f64::INFINITY {
            return StepResult::Unbounded;
        }
        if theta == 0.0 {
            self.degenerate += 1;
        } else {
            self.degenerate = 0;
        }

        for i in 0..self.m {
            let a = self.at(i, q);
            if a != 0.0 {
                let b = self.basis[i];
                self.x[b] -= dir * a * theta;
            }
        }
        self.x[q] += dir * theta;

        match leave {
            None => {
                self.state[q] = if dir > 0.0 {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
                self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            }
            Some((r, to_upper)) => {
                let b = self.basis[r];
                self.state[b] = if to_upper { VarState::AtUpper } else { VarState::AtLower };
                self.x[b] = if to_upper { self.upper[b] } else { self.lower[b] };
                self.pivot(r, q);
            }
        }
        StepResult::Continue
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let piv = self.at(r, q);
        for j in 0..w {
            self.t[r * w + j] /= piv;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.at(i, q);
            if f == 0.0 {
                continue;
            }
            for j in 0..w {
                let v = self.t[r * w + j];
                if v != 0.0 {
                    self.t[i * w + j] -= f * v;
                }
            }
            self.t[i * w + q] = 0.0;
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for j in 0..w {
                let v = self.t[r * w + j];
                if v != 0.0 {
                    self.d[j] -= dq * v;
                }
            }
            self.d[q] = 0.0;
        }
        self.basis[r] = q;
        self.state[q] = VarState::Basic;
    }

    fn run(&mut self, cost: &[f64], allowed: usize) -> Result<bool, LpError> {
        self.price(cost);
        self.degenerate = 0;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
            self.iterations += 1;
            match self.step(allowed) {
                StepResult::Optimal => return Ok(true),
                StepResult::Unbounded => return Ok(false),
                StepResult::Continue => {}
            }
        }
    }

    /// Pivots basic artificials out where a structural column allows it.
    /// Rows where none does are redundant and keep their artificial at zero.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.n_struct {
                continue;
            }
            let col = (0..self.n_struct)
                .filter(|&j| self.state[j] != VarState::Basic)
                .find(|&j| self.at(r, j).abs() > DRIVE_OUT_TOL);
            if let Some(q) = col {
                let b = self.basis[r];
                self.state[b] = VarState::AtLower;
                self.x[b] = 0.0;
                self.pivot(r, q);
            }
        }
        for j in self.n_struct..self.width {
            self.upper[j] = 0.0;
        }
    }

    /// Re-solves `B x_B = b - N x_N` from the original data to shed the
    /// round-off accumulated by incremental updates.
    fn refresh_basic_values(&mut self) {
        if self.m == 0 {
            return;
        }
        let mut rhs = DVector::from_column_slice(&self.b);
        for j in 0..self.width {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                for i in 0..self.m {
                    rhs[i] -= self.a_full[(i, j)] * self.x[j];
                }
            }
        }
        let mut bmat = DMatrix::zeros(self.m, self.m);
        for (k, &b) in self.basis.iter().enumerate() {
            bmat.set_column(k, &self.a_full.column(b));
        }
        if let Some(sol) = bmat.lu().solve(&rhs) {
            for (k, &b) in self.basis.iter().enumerate() {
                self.x[b] = sol[k];
            }
        }
    }

    fn artificial_sum(&self) -> f64 {
        self.x[self.n_struct..].iter().map(|v| v.abs()).sum()
    }
}

/// Solves `p`. Infeasibility and unboundedness are reported through
/// [`LpSolution::status`]; malformed input is an error.
pub fn solve(p: &LpProblem) -> Result<LpSolution, LpError> {
    p.check()?;
    let n = p.n_vars();
    let mut tab = Tableau::new(p);

    let mut phase1 = vec![0.0; tab.width];
    for c in &mut phase1[n..] {
        *c = 1.0;
    }
    tab.run(&phase1, tab.width)?;
    tab.refresh_basic_values();
    let b_scale = p.b_eq.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    if tab.artificial_sum() > 1e-9 * b_scale {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: tab.x[..n].to_vec(),
            objective: f64::NAN,
        });
    }
    tab.drive_out_artificials();
    tab.refresh_basic_values();

    let mut phase2 = p.cost.clone();
    phase2.resize(tab.width, 0.0);
    let bounded = tab.run(&phase2, n)?;
    tab.refresh_basic_values();

    let mut x = tab.x[..n].to_vec();
    for j in 0..n {
        if x[j] < p.lower[j] && x[j] > p.lower[j] - 1e-7 {
            x[j] = p.lower[j];
        }
        if x[j] > p.upper[j] && x[j] < p.upper[j] + 1e-7 {
            x[j] = p.upper[j];
        }
    }
    let objective = p.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status: if bounded {
            LpStatus::Optimal
        } else {
            LpStatus::Unbounded
        },
        x,
        objective,
    })
}

/// Result of [`minimize_linf`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinfSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// `‖x‖∞` at the optimum.
    pub value: f64,
}

/// `min ‖x‖∞  s.t.  A x = b,  lower ≤ x ≤ upper`.
///
/// Rewritten with an epigraph variable `t` and the constraints
/// `-t ≤ x_j ≤ t`, each closed with a nonnegative slack.
pub fn minimize_linf(a: &MatDyn, b: &[f64], lower: &[f64], upper: &[f64]) -> Result<LinfSolution, LpError> {
    let (m, n) = a.shape();
    if b.len() != m || lower.len() != n || upper.len() != n {
        return Err(LpError::Dimension("minimize_linf inputs".into()));
    }
    // Columns: x (n), t, w (n), z (n).
    let t = n;
    let nv = 3 * n + 1;
    let mut a_eq = MatDyn::zeros(m + 2 * n, nv);
    a_eq.view_mut((0, 0), (m, n)).copy_from(a);
    for j in 0..n {
        // x_j - t + w_j = 0
        a_eq[(m + j, j)] = 1.0;
        a_eq[(m + j, t)] = -1.0;
        a_eq[(m + j, n + 1 + j)] = 1.0;
        // -x_j - t + z_j = 0
        a_eq[(m + n + j, j)] = -1.0;
        a_eq[(m + n + j, t)] = -1.0;
        a_eq[(m + n + j, 2 * n + 1 + j)] = 1.0;
    }
    let mut b_eq = b.to_vec();
    b_eq.resize(m + 2 * n, 0.0);
    let mut cost = vec![0.0; nv];
    cost[t] = 1.0;
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    lo.resize(nv, 0.0);
    hi.resize(nv, f64::INFINITY);

    let sol = solve(&LpProblem {
        cost,
        a_eq,
        b_eq,
        lower: lo,
        upper: hi,
    })?;
    let x = sol.x[..n].to_vec();
    let value = match sol.status {
        LpStatus::Optimal => x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())),
        _ => f64::INFINITY,
    };
    Ok(LinfSolution {
        status: sol.status,
        x,
        value,
    })
}

/// Result of [`minimize_range`].
#[derive(Debug, Clone, PartialEq)]
pub struct RangeSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// `max(x) - min(x)` at the optimum.
    pub range: f64,
}

/// `min max(x) - min(x)  s.t.  A x = b,  0 ≤ x ≤ upper`.
///
/// Two free scalars bracket the entries, `s_lo ≤ x_j ≤ s_hi`, and their gap
/// is minimized.
pub fn minimize_range(a: &MatDyn, b: &[f64], upper: &[f64]) -> Result<RangeSolution, LpError> {
    let (m, n) = a.shape();
    if b.len() != m || upper.len() != n {
        return Err(LpError::Dimension("minimize_range inputs".into()));
    }
    // Columns: x (n), s_hi, s_lo, w (n), z (n).
    let (s_hi, s_lo) = (n, n + 1);
    let nv = 3 * n + 2;
    let mut a_eq = MatDyn::zeros(m + 2 * n, nv);
    a_eq.view_mut((0, 0), (m, n)).copy_from(a);
    for j in 0..n {
        // x_j - s_hi + w_j = 0
        a_eq[(m + j, j)] = 1.0;
        a_eq[(m + j, s_hi)] = -1.0;
        a_eq[(m + j, n + 2 + j)] = 1.0;
        // x_j - s_lo - z_j = 0
        a_eq[(m + n + j, j)] = 1.0;
        a_eq[(m + n + j, s_lo)] = -1.0;
        a_eq[(m + n + j, 2 * n + 2 + j)] = -1.0;
    }
    let mut b_eq = b.to_vec();
    b_eq.resize(m + 2 * n, 0.0);
    let mut cost = vec![0.0; nv];
    cost[s_hi] = 1.0;
    cost[s_lo] = -1.0;
    let mut lo = vec![0.0; nv];
    let mut hi = upper.to_vec();
    hi.resize(nv, f64::INFINITY);
    lo[s_hi] = f64::NEG_INFINITY;
    lo[s_lo] = f64::NEG_INFINITY;

    let sol = solve(&LpProblem {
        cost,
        a_eq,
        b_eq,
        lower: lo,
        upper: hi,
    })?;
    let x = sol.x[..n].to_vec();
    let range = match sol.status {
        LpStatus::Optimal => {
            let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
            max - min
        }
        _ => f64::INFINITY,
    };
    Ok(RangeSolution {
        status: sol.status,
        x,
        range,
    })
}
