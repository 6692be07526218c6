//! Box-constrained particle swarm optimization.
//!
//! Deterministic for a fixed seed: random draws happen on one thread in a
//! fixed order, objective evaluations of one generation run in parallel, and
//! personal/global bests are updated afterwards in particle order. Ties keep
//! the earlier best.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    /// Velocity inertia `w`.
    pub inertia: f64,
    /// Pull towards the personal best, `c₁`.
    pub cognitive: f64,
    /// Pull towards the global best, `c₂`.
    pub social: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        // Clerc-Kennedy constriction coefficients.
        Self {
            particles: 40,
            iterations: 120,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub best: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimizes `f` over the box `[lower, upper]`.
///
/// `initial` positions (clamped into the box) replace the first random
/// particles, which lets callers seed the swarm with known candidates.
pub fn minimize<F>(f: F, lower: &[f64], upper: &[f64], cfg: &PsoConfig, initial: &[Vec<f64>]) -> PsoResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = lower.len();
    assert_eq!(dim, upper.len());
    let n = cfg.particles.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let clamp = |x: &mut [f64]| {
        for d in 0..dim {
            x[d] = x[d].clamp(lower[d], upper[d]);
        }
    };
    let vmax: Vec<f64> = (0..dim).map(|d| 0.5 * (upper[d] - lower[d])).collect();

    let mut pos: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|d| sample(&mut rng, lower[d], upper[d])).collect())
        .collect();
    for (p, init) in pos.iter_mut().zip(initial) {
        p.copy_from_slice(init);
        clamp(p);
    }
    let mut vel: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|d| sample(&mut rng, -vmax[d], vmax[d]) * 0.2).collect())
        .collect();

    let mut val: Vec<f64> = pos.par_iter().map(|p| f(p)).collect();
    let mut evaluations = n;
    let mut pbest = pos.clone();
    let mut pbest_val = val.clone();
    let mut g = 0;
    for i in 1..n {
        if val[i] < val[g] {
            g = i;
        }
    }
    let mut gbest = pos[g].clone();
    let mut gbest_val = val[g];

    for _ in 0..cfg.iterations {
        for i in 0..n {
            for d in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = cfg.inertia * vel[i][d]
                    + cfg.cognitive * r1 * (pbest[i][d] - pos[i][d])
                    + cfg.social * r2 * (gbest[d] - pos[i][d]);
                vel[i][d] = v.clamp(-vmax[d], vmax[d]);
                let x = pos[i][d] + vel[i][d];
                if x < lower[d] || x > upper[d] {
                    vel[i][d] = 0.0;
                }
                pos[i][d] = x.clamp(lower[d], upper[d]);
            }
        }
        val = pos.par_iter().map(|p| f(p)).collect();
        evaluations += n;
        for i in 0..n {
            if val[i] < pbest_val[i] {
                pbest_val[i] = val[i];
                pbest[i].copy_from_slice(&pos[i]);
            }
            if val[i] < gbest_val {
                gbest_val = val[i];
                gbest.copy_from_slice(&pos[i]);
            }
        }
    }

    PsoResult {
        best: gbest,
        value: gbest_val,
        evaluations,
    }
}

fn sample(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}
