//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use placer_core::geometry::{Footprint, Part, Placed, Pose, Vec2};
use rand::Rng;
use std::f64::consts::PI;

/// Convex polygon with 3..=`max_vertices` vertices on a random ellipse.
/// Angular gaps are kept away from zero so the polygon stays strictly convex.
pub fn random_convex<R: Rng>(rng: &mut R, max_vertices: usize) -> Vec<Vec2> {
    let n = rng.gen_range(3..=max_vertices);
    loop {
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        angles.sort_by(f64::total_cmp);
        let gaps_ok = (0..n).all(|i| {
            let next = if i + 1 == n { angles[0] + 2.0 * PI } else { angles[i + 1] };
            next - angles[i] > 0.15
        });
        if !gaps_ok {
            continue;
        }
        let (ax, ay) = (rng.gen_range(0.3..1.5), rng.gen_range(0.3..1.5));
        let tilt = rng.gen_range(-PI..PI);
        return angles
            .iter()
            .map(|&t| Vec2::new(ax * t.cos(), ay * t.sin()).rotated(tilt))
            .collect();
    }
}

pub fn random_pose<R: Rng>(rng: &mut R, spread: f64) -> Pose {
    Pose::new(
        rng.gen_range(-spread..spread),
        rng.gen_range(-spread..spread),
        rng.gen_range(-PI..PI),
    )
}

/// World vertices of a single-polygon placement.
pub fn world_vertices(placed: &Placed) -> Vec<Vec2> {
    match &placed.parts[..] {
        [Part::Polygon(p)] => p.vertices().to_vec(),
        _ => panic!("expected one polygon part"),
    }
}

fn support(vs: &[Vec2], u: Vec2) -> f64 {
    vs.iter().map(|v| v.dot(u)).fold(f64::NEG_INFINITY, f64::max)
}

/// Distance `a` must travel along `u` to clear `b`.
fn clearance(a: &[Vec2], b: &[Vec2], u: Vec2) -> f64 {
    support(b, u) + support(a, -u)
}

/// Penetration depth by dense direction sampling: a coarse sweep followed by
/// fine sweeps around the best coarse directions. Zero when separated.
pub fn sampled_depth(a: &[Vec2], b: &[Vec2]) -> f64 {
    const COARSE: usize = 4096;
    const FINE: usize = 4096;
    let step = 2.0 * PI / COARSE as f64;
    let mut coarse: Vec<(f64, f64)> = (0..COARSE)
        .map(|k| {
            let t = k as f64 * step;
            (clearance(a, b, Vec2::from_angle(t)), t)
        })
        .collect();
    coarse.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best = coarse[0].0;
    for &(_, t0) in coarse.iter().take(4) {
        for k in 0..=FINE {
            let t = t0 - 1.5 * step + 3.0 * step * k as f64 / FINE as f64;
            best = best.min(clearance(a, b, Vec2::from_angle(t)));
        }
    }
    best.max(0.0)
}

/// Analytic circle-circle depth.
pub fn circle_depth(r1: f64, r2: f64, d: f64) -> f64 {
    (r1 + r2 - d).max(0.0)
}

/// Footprint with vertices given relative to an arbitrary origin.
pub fn polygon_footprint(vs: Vec<Vec2>) -> Footprint {
    Footprint::polygon(vs).expect("generated polygon is convex")
}

/// Pearson chi-square statistic for observed counts against equal expectation.
pub fn chi_square_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum()
}
