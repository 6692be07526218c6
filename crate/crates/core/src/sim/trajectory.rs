//! Reference trajectories and the wind zone.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::control::Reference;
use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    /// Hold the origin.
    Hover,
    /// Rest-to-rest sweep along `x` with a sideways bow in `y`.
    Arc,
}

/// `x(t) = L s(t/T)`, `y(t) = A sin²(π s(t/T))` with the quintic smooth step
/// `s(τ) = 10τ³ − 15τ⁴ + 6τ⁵`. Position, velocity and acceleration are zero
/// at both ends and the acceleration is continuous. After `T` the end point
/// is held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    /// Travel time `T` [s].
    pub duration: f64,
    /// Distance `L` along `x` [m].
    pub distance: f64,
    /// Peak sideways excursion `A` [m].
    pub amplitude: f64,
}

impl Default for Trajectory {
    fn default() -> Self {
        Self {
            kind: TrajectoryKind::Arc,
            duration: 40.0,
            distance: 5.0,
            amplitude: 1.0,
        }
    }
}

impl Trajectory {
    pub fn hover(duration: f64) -> Self {
        Self {
            kind: TrajectoryKind::Hover,
            duration,
            distance: 0.0,
            amplitude: 0.0,
        }
    }

    pub fn sample(&self, t: f64) -> Reference {
        if self.kind == TrajectoryKind::Hover {
            return Reference::default();
        }
        let big_t = self.duration;
        let tau = (t / big_t).clamp(0.0, 1.0);
        let (s, s1, s2) = smooth_step(tau);
        // chain rule from τ to t
        let (sd, sdd) = if t > 0.0 && t < big_t {
            (s1 / big_t, s2 / (big_t * big_t))
        } else {
            (0.0, 0.0)
        };
        let (l, a) = (self.distance, self.amplitude);
        // y = A sin²(π s) = A (1 − cos 2πs) / 2
        let w = 2.0 * PI;
        let y = 0.5 * a * (1.0 - (w * s).cos());
        let yd = 0.5 * a * w * (w * s).sin() * sd;
        let ydd = 0.5 * a * w * ((w * s).sin() * sdd + w * (w * s).cos() * sd * sd);
        Reference {
            position: Vec3::new(l * s, y, 0.0),
            velocity: Vec3::new(l * sd, yd, 0.0),
            acceleration: Vec3::new(l * sdd, ydd, 0.0),
        }
    }

    /// Largest `|m a_ref + wind|` over the lateral axes, sampled every `dt`.
    pub fn peak_lateral_force(&self, mass: f64, zone: &DisturbanceZone, dt: f64) -> f64 {
        let n = (self.duration / dt).ceil() as usize;
        (0..=n)
            .map(|k| {
                let r = self.sample(k as f64 * dt);
                let f = mass * r.acceleration - wind_force(zone, &r.position);
                f.x.abs().max(f.y.abs())
            })
            .fold(0.0, f64::max)
    }
}

/// `s(τ)` and its first two derivatives.
fn smooth_step(tau: f64) -> (f64, f64, f64) {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    (
        t3 * (10.0 - 15.0 * tau + 6.0 * t2),
        30.0 * t2 * (1.0 - tau).powi(2),
        60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau),
    )
}

/// Constant world-frame force acting while `x_lo ≤ p_x ≤ x_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisturbanceZone {
    pub force: [f64; 3],
    pub x_range: [f64; 2],
}

impl Default for DisturbanceZone {
    fn default() -> Self {
        Self {
            force: [0.0, 0.5, 0.0],
            x_range: [1.0, 4.0],
        }
    }
}

impl DisturbanceZone {
    pub fn none() -> Self {
        Self {
            force: [0.0; 3],
            x_range: [0.0, 1.0],
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (self.x_range[0]..=self.x_range[1]).contains(&p.x)
    }
}

pub fn wind_force(zone: &DisturbanceZone, p_w: &Vec3) -> Vec3 {
    if zone.contains(p_w) {
        Vec3::from(zone.force)
    } else {
        Vec3::zeros()
    }
}
