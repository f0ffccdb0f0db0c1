//! Quasi-static potential-field relaxation.
//!
//! Every penetrating pair (and every overhang) produces a repulsive force
//! proportional to its penetration depth, applied at the overlap centre so that
//! off-centre contacts also turn the bodies. Velocities follow a damped
//! semi-implicit update; obstacles and the surface push but never move.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    boundary_penetration_placed, penetration_placed, Placed, Pose, Vec2,
};
use crate::scene::{
    project_constraints, Configuration, CostC, ObjectKind, PlacementBalls, Scene, SceneError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxError {
    #[error("relaxation parameter `{0}` out of range")]
    BadParam(&'static str),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxParams {
    /// Force per unit penetration depth.
    pub stiffness: f64,
    /// Fraction of velocity kept from one iteration to the next.
    pub damping: f64,
    pub step: f64,
    pub max_iters: usize,
    /// Equilibrium threshold on per-iteration motion. Defaults to
    /// `1e-9 ×` the surface diameter.
    pub stall_tol: Option<f64>,
    pub torque_gain: f64,
    /// Also stop once a window of this many iterations fails to lower the
    /// summed depth by a relative 1e-3; 0 disables the check.
    pub plateau_window: usize,
}

impl Default for RelaxParams {
    fn default() -> Self {
        RelaxParams {
            stiffness: 1.0,
            damping: 0.9,
            step: 0.2,
            max_iters: 2000,
            stall_tol: None,
            torque_gain: 0.2,
            plateau_window: 200,
        }
    }
}

impl RelaxParams {
    pub fn validate(&self) -> Result<(), RelaxError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.stiffness) {
            return Err(RelaxError::BadParam("stiffness"));
        }
        if !(positive(self.damping) && self.damping < 1.0) {
            return Err(RelaxError::BadParam("damping"));
        }
        if !positive(self.step) {
            return Err(RelaxError::BadParam("step"));
        }
        if self.max_iters == 0 {
            return Err(RelaxError::BadParam("max_iters"));
        }
        if let Some(t) = self.stall_tol {
            if !positive(t) {
                return Err(RelaxError::BadParam("stall_tol"));
            }
        }
        if !positive(self.torque_gain) {
            return Err(RelaxError::BadParam("torque_gain"));
        }
        Ok(())
    }

    pub fn stall_tol_for(&self, scene: &Scene) -> f64 {
        self.stall_tol.unwrap_or(1e-9 * scene.surface_diameter())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxReport {
    pub config: Configuration,
    pub iters_used: usize,
    pub converged: bool,
    pub cost_p_before: f64,
    pub cost_p_after: f64,
    pub cost_c_after: CostC,
}

struct Relaxer<'a> {
    scene: &'a Scene,
    balls: &'a PlacementBalls,
    params: &'a RelaxParams,
    mobile: Vec<bool>,
    inv_inertia: Vec<f64>,
    poses: Vec<Pose>,
    placed: Vec<Placed>,
    vel: Vec<Vec2>,
    omega: Vec<f64>,
    force: Vec<Vec2>,
    torque: Vec<f64>,
    /// Summed penetration depth seen by the last force pass.
    energy: f64,
}

impl<'a> Relaxer<'a> {
    fn new(
        scene: &'a Scene,
        balls: &'a PlacementBalls,
        config: &Configuration,
        params: &'a RelaxParams,
    ) -> Result<Self, SceneError> {
        scene.require_complete(config)?;
        let n = scene.len();
        let poses: Vec<Pose> = (0..n).map(|i| config.get(i).expect("complete")).collect();
        let placed = scene
            .objects
            .iter()
            .zip(&poses)
            .map(|(o, p)| o.footprint.place(p))
            .collect();
        let mobile = (0..n)
            .map(|i| match scene.kind(i) {
                ObjectKind::Obstacle => false,
                ObjectKind::Movable => !balls.is_frozen(i),
                ObjectKind::New => true,
            })
            .collect();
        let inv_inertia = scene
            .objects
            .iter()
            .map(|o| {
                let r = o.footprint.distal_radius();
                if r > 0.0 {
                    1.0 / (r * r)
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Relaxer {
            scene,
            balls,
            params,
            mobile,
            inv_inertia,
            poses,
            placed,
            vel: vec![Vec2::ZERO; n],
            omega: vec![0.0; n],
            force: vec![Vec2::ZERO; n],
            torque: vec![0.0; n],
            energy: 0.0,
        })
    }

    fn accumulate_forces<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let k = self.params.stiffness;
        let n = self.poses.len();
        self.force.iter_mut().for_each(|f| *f = Vec2::ZERO);
        self.torque.iter_mut().for_each(|t| *t = 0.0);
        self.energy = 0.0;
        for i in 0..n {
            let a = &self.placed[i];
            for j in i + 1..n {
                if !(self.mobile[i] || self.mobile[j]) {
                    continue;
                }
                let b = &self.placed[j];
                let reach = a.radius + b.radius;
                if (a.center - b.center).norm_sq() >= reach * reach {
                    continue;
                }
                let pen = penetration_placed(a, b);
                if pen.depth <= 0.0 {
                    continue;
                }
                let dir = if a.center == b.center {
                    Vec2::from_angle(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                } else {
                    pen.direction
                };
                self.energy += pen.depth;
                let f = dir * (k * pen.depth);
                self.force[i] += f;
                self.force[j] -= f;
                self.torque[i] += (pen.contact - a.center).cross(f);
                self.torque[j] -= (pen.contact - b.center).cross(f);
            }
            if self.mobile[i] {
                let pen = boundary_penetration_placed(a, &self.scene.surface);
                if pen.depth > 0.0 {
                    self.energy += pen.depth;
                    let f = pen.direction * (k * pen.depth);
                    self.force[i] += f;
                    self.torque[i] += (pen.contact - a.center).cross(f);
                }
            }
        }
    }

    /// One force pass and integration step; returns the largest motion.
    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        self.accumulate_forces(rng);
        let p = self.params;
        let dt = p.step;
        let mut motion: f64 = 0.0;
        for i in 0..self.poses.len() {
            if !self.mobile[i] {
                continue;
            }
            // Momentum that runs against the current force is dropped.
            if self.vel[i].dot(self.force[i]) < 0.0 {
                self.vel[i] = Vec2::ZERO;
            }
            if self.omega[i] * self.torque[i] < 0.0 {
                self.omega[i] = 0.0;
            }
            self.vel[i] = self.vel[i] * p.damping + self.force[i] * dt;
            self.omega[i] = self.omega[i] * p.damping
                + self.torque[i] * (p.torque_gain * dt * self.inv_inertia[i]);
            if self.vel[i] == Vec2::ZERO && self.omega[i] == 0.0 {
                continue;
            }
            let old = self.poses[i];
            let moved = Pose::new(
                old.x + self.vel[i].x,
                old.y + self.vel[i].y,
                old.theta + self.omega[i],
            );
            let new = project_constraints(self.scene, self.balls, i, moved);
            if new.position() != moved.position() {
                self.vel[i] = Vec2::ZERO;
            }
            if new.theta != moved.theta {
                self.omega[i] = 0.0;
            }
            let radius = self.placed[i].radius;
            let d = (new.position() - old.position()).norm();
            let arc = radius * crate::geometry::angle_diff(old.theta, new.theta).abs();
            motion = motion.max(d).max(arc);
            self.poses[i] = new;
            self.scene.objects[i].footprint.place_into(&new, &mut self.placed[i]);
        }
        motion
    }

    fn config(&self) -> Configuration {
        Configuration::new(self.poses.iter().copied().map(Some).collect())
    }
}

/// Relaxes `config` toward a local minimum of summed penetration depth while
/// keeping movables in their placement balls and objects in their regions.
pub fn innermost_search<R: Rng + ?Sized>(
    scene: &Scene,
    balls: &PlacementBalls,
    config: &Configuration,
    params: &RelaxParams,
    rng: &mut R,
) -> Result<RelaxReport, RelaxError> {
    params.validate()?;
    let before = scene.contacts(config)?.pen_sum();
    let mut relaxer = Relaxer::new(scene, balls, config, params)?;
    let stall = params.stall_tol_for(scene);
    let mut iters_used = params.max_iters;
    let mut converged = false;
    let window = params.plateau_window;
    let mut mark = f64::INFINITY;
    let mut low = f64::INFINITY;
    for iter in 1..=params.max_iters {
        let motion = relaxer.step(rng);
        low = low.min(relaxer.energy);
        if motion < stall {
            iters_used = iter;
            converged = true;
            break;
        }
        if window > 0 && iter % window == 0 {
            if low > mark * (1.0 - 1e-3) {
                iters_used = iter;
                converged = true;
                break;
            }
            mark = low;
        }
    }
    let config = relaxer.config();
    let after = scene.contacts(&config)?.cost_c();
    Ok(RelaxReport {
        config,
        iters_used,
        converged,
        cost_p_before: before,
        cost_p_after: after.pen_sum,
        cost_c_after: after,
    })
}

/// True iff a single force pass from rest moves no body by `stall_tol` or more.
pub fn equilibrium_check(
    scene: &Scene,
    balls: &PlacementBalls,
    config: &Configuration,
    params: &RelaxParams,
) -> Result<bool, RelaxError> {
    params.validate()?;
    let mut relaxer = Relaxer::new(scene, balls, config, params)?;
    // Coincident centres only need some direction here; the magnitude decides.
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    Ok(relaxer.step(&mut rng) < params.stall_tol_for(scene))
}
