//! Planar rigid shapes and penetration queries.
//!
//! Footprints are unions of convex primitives (circles and strictly convex
//! polygons). Penetration between two footprints is the maximum, over all
//! part pairs, of the separating-axis minimum translation depth.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Depth at or below which two bodies are considered touching, not colliding.
pub const CONTACT_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("footprint has no parts")]
    Empty,
    #[error("polygon part {part} has {count} vertices, need at least 3")]
    TooFewVertices { part: usize, count: usize },
    #[error("polygon part {part} is not strictly convex at vertex {vertex}")]
    NotConvex { part: usize, vertex: usize },
    #[error("circle part {part} has invalid radius {radius}")]
    BadRadius { part: usize, radius: f64 },
    #[error("part {part} does not touch any other part")]
    Disconnected { part: usize },
    #[error("non-finite coordinate in part {part}")]
    NonFinite { part: usize },
    #[error("surface must be a single convex polygon or circle")]
    BadSurface,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2::new(c, s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Unit vector, or zero when the length is zero.
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Vec2::ZERO
        }
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotated(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `(-π, π]`. Angles already in range are returned unchanged.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

/// Minimal signed difference `to - from`, in `(-π, π]`.
pub fn angle_diff(from: f64, to: f64) -> f64 {
    normalize_angle(to - from)
}

/// Planar rigid pose. `theta` is kept in `(-π, π]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPose")]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPose {
    x: f64,
    y: f64,
    #[serde(default)]
    theta: f64,
}

impl From<RawPose> for Pose {
    fn from(r: RawPose) -> Self {
        Pose::new(r.x, r.y, r.theta)
    }
}

impl Default for Pose {
    fn default() -> Self {
        Pose::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn from_position(p: Vec2, theta: f64) -> Self {
        Pose::new(p.x, p.y, theta)
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn with_position(&self, p: Vec2) -> Pose {
        Pose {
            x: p.x,
            y: p.y,
            theta: self.theta,
        }
    }

    /// Maps a body-frame point into the parent frame.
    pub fn apply(&self, p: Vec2) -> Vec2 {
        p.rotated(self.theta) + self.position()
    }

    /// `self ∘ other`: first apply `other`, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        let p = self.apply(other.position());
        Pose::new(p.x, p.y, self.theta + other.theta)
    }

    pub fn inverse(&self) -> Pose {
        let p = (-self.position()).rotated(-self.theta);
        Pose::new(p.x, p.y, -self.theta)
    }
}

/// Strictly convex, counter-clockwise polygon with cached outward edge normals.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
    normals: Vec<Vec2>,
    /// Indices of normals that are distinct up to sign; enough for SAT.
    axes: Vec<usize>,
}

impl ConvexPolygon {
    fn from_ccw(vertices: Vec<Vec2>) -> Self {
        let n = vertices.len();
        let normals = (0..n)
            .map(|i| {
                let e = vertices[(i + 1) % n] - vertices[i];
                Vec2::new(e.y, -e.x).normalized()
            })
            .collect::<Vec<Vec2>>();
        let mut axes: Vec<usize> = Vec::with_capacity(n);
        for i in 0..n {
            if !axes.iter().any(|&j| normals[j].cross(normals[i]).abs() < 1e-12) {
                axes.push(i);
            }
        }
        ConvexPolygon {
            vertices,
            normals,
            axes,
        }
    }

    /// Validates convexity; clockwise input is reversed.
    fn validated(mut vertices: Vec<Vec2>, part: usize) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices { part, count: n });
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite { part });
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let scale = vertices
            .iter()
            .map(|v| (*v - vertices[0]).norm())
            .fold(0.0, f64::max);
        let eps = 1e-12 * scale * scale;
        for i in 0..n {
            let a = vertices[(i + n - 1) % n];
            let b = vertices[i];
            let c = vertices[(i + 1) % n];
            if (b - a).cross(c - b) <= eps {
                return Err(GeometryError::NotConvex { part, vertex: i });
            }
        }
        // A star polygon passes the local turn test but winds more than once.
        let turning: f64 = (0..n)
            .map(|i| {
                let a = vertices[(i + n - 1) % n];
                let b = vertices[i];
                let c = vertices[(i + 1) % n];
                let (e1, e2) = (b - a, c - b);
                e1.cross(e2).atan2(e1.dot(e2))
            })
            .sum();
        if turning > 2.0 * PI + 1e-6 {
            return Err(GeometryError::NotConvex { part, vertex: 0 });
        }
        Ok(ConvexPolygon::from_ccw(vertices))
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    fn transformed(&self, pose: &Pose) -> ConvexPolygon {
        let (s, c) = pose.theta.sin_cos();
        let rot = |v: Vec2| Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y);
        let t = pose.position();
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&v| rot(v) + t).collect(),
            normals: self.normals.iter().map(|&n| rot(n)).collect(),
            axes: self.axes.clone(),
        }
    }

    fn transform_into(&self, pose: &Pose, out: &mut ConvexPolygon) {
        let (s, c) = pose.theta.sin_cos();
        let rot = |v: Vec2| Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y);
        let t = pose.position();
        out.vertices.clear();
        out.vertices.extend(self.vertices.iter().map(|&v| rot(v) + t));
        out.normals.clear();
        out.normals.extend(self.normals.iter().map(|&n| rot(n)));
        if out.axes != self.axes {
            out.axes.clone_from(&self.axes);
        }
    }

    fn translated(&self, d: Vec2) -> ConvexPolygon {
        ConvexPolygon::from_ccw(self.vertices.iter().map(|&v| v + d).collect())
    }

    fn project(&self, axis: Vec2) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in &self.vertices {
            let p = v.dot(axis);
            lo = lo.min(p);
            hi = hi.max(p);
        }
        (lo, hi)
    }

    fn support(&self, dir: Vec2) -> Vec2 {
        let mut best = self.vertices[0];
        let mut best_p = best.dot(dir);
        for &v in &self.vertices[1..] {
            let p = v.dot(dir);
            if p > best_p {
                best_p = p;
                best = v;
            }
        }
        best
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Vec2 {
        area_centroid(&self.vertices)
    }

    /// True iff `p` is inside or on the boundary.
    pub fn contains(&self, p: Vec2) -> bool {
        self.vertices
            .iter()
            .zip(&self.normals)
            .all(|(v, n)| (p - *v).dot(*n) <= 0.0)
    }

    /// Closest point of the (filled) polygon to `p`.
    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        if self.contains(p) {
            return p;
        }
        let n = self.vertices.len();
        let mut best = self.vertices[0];
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            let q = closest_on_segment(self.vertices[i], self.vertices[(i + 1) % n], p);
            let d = (q - p).norm_sq();
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }
}

fn area_centroid(vs: &[Vec2]) -> Vec2 {
    let n = vs.len();
    let mut a = 0.0;
    let mut c = Vec2::ZERO;
    let o = vs[0];
    for i in 0..n {
        let p = vs[i] - o;
        let q = vs[(i + 1) % n] - o;
        let w = p.cross(q);
        a += w;
        c += (p + q) * w;
    }
    o + c * (1.0 / (3.0 * a))
}

fn signed_area(vs: &[Vec2]) -> f64 {
    let n = vs.len();
    (0..n).map(|i| vs[i].cross(vs[(i + 1) % n])).sum::<f64>() * 0.5
}

fn closest_on_segment(a: Vec2, b: Vec2, p: Vec2) -> Vec2 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    a + ab * t
}

/// One convex primitive of a footprint.
#[derive(Clone, Debug, PartialEq)]
pub enum Part {
    Circle { center: Vec2, radius: f64 },
    Polygon(ConvexPolygon),
}

impl Part {
    pub fn circle(center: Vec2, radius: f64) -> Part {
        Part::Circle { center, radius }
    }

    /// Builds a convex polygon part, validating convexity.
    pub fn polygon(vertices: Vec<Vec2>) -> Result<Part, GeometryError> {
        ConvexPolygon::validated(vertices, 0).map(Part::Polygon)
    }

    pub fn area(&self) -> f64 {
        match self {
            Part::Circle { radius, .. } => PI * radius * radius,
            Part::Polygon(p) => p.area(),
        }
    }

    pub fn centroid(&self) -> Vec2 {
        match self {
            Part::Circle { center, .. } => *center,
            Part::Polygon(p) => p.centroid(),
        }
    }

    fn translated(&self, d: Vec2) -> Part {
        match self {
            Part::Circle { center, radius } => Part::Circle {
                center: *center + d,
                radius: *radius,
            },
            Part::Polygon(p) => Part::Polygon(p.translated(d)),
        }
    }

    fn scaled(&self, k: f64) -> Part {
        match self {
            Part::Circle { center, radius } => Part::Circle {
                center: *center * k,
                radius: radius * k,
            },
            Part::Polygon(p) => {
                Part::Polygon(ConvexPolygon::from_ccw(p.vertices.iter().map(|&v| v * k).collect()))
            }
        }
    }

    fn transformed(&self, pose: &Pose) -> Part {
        match self {
            Part::Circle { center, radius } => Part::Circle {
                center: pose.apply(*center),
                radius: *radius,
            },
            Part::Polygon(p) => Part::Polygon(p.transformed(pose)),
        }
    }

    /// Overwrites `out` with this part under `pose`, reusing its buffers
    /// when the kinds match.
    fn transform_into(&self, pose: &Pose, out: &mut Part) {
        match (self, out) {
            (Part::Polygon(p), Part::Polygon(q)) => p.transform_into(pose, q),
            (_, out) => *out = self.transformed(pose),
        }
    }

    /// Farthest point of the part along `dir` and its projection.
    fn support(&self, dir: Vec2) -> (Vec2, f64) {
        match self {
            Part::Circle { center, radius } => {
                let p = *center + dir.normalized() * *radius;
                (p, center.dot(dir) + radius * dir.norm())
            }
            Part::Polygon(poly) => {
                let p = poly.support(dir);
                (p, p.dot(dir))
            }
        }
    }

    fn max_norm(&self) -> f64 {
        match self {
            Part::Circle { center, radius } => center.norm() + radius,
            Part::Polygon(p) => p.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Part::Circle { center, radius } => center.is_finite() && radius.is_finite(),
            Part::Polygon(p) => p.vertices.iter().all(|v| v.is_finite()),
        }
    }
}

/// A rigid planar shape: a connected union of convex parts whose
/// area-weighted centroid sits at the body-frame origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Footprint {
    parts: Vec<Part>,
    distal: f64,
    area: f64,
}

impl Footprint {
    /// Validates the parts and re-centers them on their joint centroid.
    pub fn new(parts: Vec<Part>) -> Result<Self, GeometryError> {
        if parts.is_empty() {
            return Err(GeometryError::Empty);
        }
        let mut checked = Vec::with_capacity(parts.len());
        for (i, part) in parts.into_iter().enumerate() {
            if !part.is_finite() {
                return Err(GeometryError::NonFinite { part: i });
            }
            checked.push(match part {
                Part::Circle { radius, .. } if radius < 0.0 => {
                    return Err(GeometryError::BadRadius { part: i, radius })
                }
                Part::Polygon(p) => Part::Polygon(
                    ConvexPolygon::validated(p.vertices, i)?,
                ),
                c => c,
            });
        }
        check_connected(&checked)?;

        let area: f64 = checked.iter().map(Part::area).sum();
        let centroid = if area > 0.0 {
            checked
                .iter()
                .fold(Vec2::ZERO, |acc, p| acc + p.centroid() * p.area())
                * (1.0 / area)
        } else {
            checked.iter().fold(Vec2::ZERO, |acc, p| acc + p.centroid())
                * (1.0 / checked.len() as f64)
        };
        // Leave already-centred shapes bit-identical so serialization round-trips.
        if centroid.norm() > 1e-12 {
            checked = checked.iter().map(|p| p.translated(-centroid)).collect();
        }
        let area: f64 = checked.iter().map(Part::area).sum();
        let distal = checked.iter().map(Part::max_norm).fold(0.0, f64::max);
        Ok(Footprint {
            parts: checked,
            distal,
            area,
        })
    }

    pub fn circle(radius: f64) -> Self {
        Footprint::new(vec![Part::circle(Vec2::ZERO, radius)]).expect("valid circle")
    }

    pub fn rectangle(width: f64, height: f64) -> Self {
        let (w, h) = (width / 2.0, height / 2.0);
        Footprint::new(vec![Part::Polygon(ConvexPolygon::from_ccw(vec![
            Vec2::new(-w, -h),
            Vec2::new(w, -h),
            Vec2::new(w, h),
            Vec2::new(-w, h),
        ]))])
        .expect("valid rectangle")
    }

    pub fn square(side: f64) -> Self {
        Footprint::rectangle(side, side)
    }

    pub fn polygon(vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        Footprint::new(vec![Part::Polygon(ConvexPolygon::validated(vertices, 0)?)])
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    /// Sum of part areas; exact when parts do not overlap.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Distance from the centroid to the farthest point of the shape.
    pub fn distal_radius(&self) -> f64 {
        self.distal
    }

    /// Copy enlarged by `factor` about the centroid.
    pub fn scaled(&self, factor: f64) -> Result<Footprint, GeometryError> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(GeometryError::BadRadius { part: 0, radius: factor });
        }
        Footprint::new(self.parts.iter().map(|p| p.scaled(factor)).collect())
    }

    /// World-frame copy of the parts at `pose`.
    pub fn place(&self, pose: &Pose) -> Placed {
        Placed {
            parts: self.parts.iter().map(|p| p.transformed(pose)).collect(),
            center: pose.position(),
            radius: self.distal,
        }
    }

    /// Same as [`Footprint::place`] but reuses the buffers of an earlier
    /// placement of this footprint.
    pub fn place_into(&self, pose: &Pose, out: &mut Placed) {
        if out.parts.len() != self.parts.len() {
            *out = self.place(pose);
            return;
        }
        for (p, o) in self.parts.iter().zip(out.parts.iter_mut()) {
            p.transform_into(pose, o);
        }
        out.center = pose.position();
        out.radius = self.distal;
    }
}

pub fn distal_radius(obj: &Footprint) -> f64 {
    obj.distal_radius()
}

fn check_connected(parts: &[Part]) -> Result<(), GeometryError> {
    let n = parts.len();
    if n == 1 {
        return Ok(());
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && parts_touch(&parts[i], &parts[j]) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(part) => Err(GeometryError::Disconnected { part }),
        None => Ok(()),
    }
}

fn parts_touch(a: &Part, b: &Part) -> bool {
    let tol = 1e-9 * (1.0 + a.max_norm().max(b.max_norm()));
    match (a, b) {
        (Part::Circle { center: ca, radius: ra }, Part::Circle { center: cb, radius: rb }) => {
            (*ca - *cb).norm() <= ra + rb + tol
        }
        (Part::Circle { center, radius }, Part::Polygon(p))
        | (Part::Polygon(p), Part::Circle { center, radius }) => {
            (p.closest_point(*center) - *center).norm() <= radius + tol
        }
        (Part::Polygon(p), Part::Polygon(q)) => {
            // No edge normal separates them by more than `tol`.
            p.normals.iter().chain(&q.normals).all(|&n| {
                let (alo, ahi) = p.project(n);
                let (blo, bhi) = q.project(n);
                blo <= ahi + tol && alo <= bhi + tol
            })
        }
    }
}

/// A footprint transformed into the world frame.
#[derive(Clone, Debug)]
pub struct Placed {
    pub parts: Vec<Part>,
    pub center: Vec2,
    pub radius: f64,
}

/// Minimum-translation result. Translating the first body by
/// `depth * direction` separates the deepest part pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penetration {
    pub depth: f64,
    pub direction: Vec2,
    /// World point where the deepest overlap is centred.
    pub contact: Vec2,
}

impl Penetration {
    pub const NONE: Penetration = Penetration {
        depth: 0.0,
        direction: Vec2::ZERO,
        contact: Vec2::ZERO,
    };

    pub fn is_collision(&self, tol: f64) -> bool {
        self.depth > tol
    }

    fn flipped(self) -> Penetration {
        Penetration {
            direction: -self.direction,
            ..self
        }
    }
}

/// Penetration between two footprints at the given poses.
pub fn penetration(a: &Footprint, pose_a: &Pose, b: &Footprint, pose_b: &Pose) -> Penetration {
    penetration_placed(&a.place(pose_a), &b.place(pose_b))
}

pub fn in_collision(a: &Footprint, pose_a: &Pose, b: &Footprint, pose_b: &Pose, tol: f64) -> bool {
    penetration(a, pose_a, b, pose_b).depth > tol
}

/// Penetration between already-placed footprints.
pub fn penetration_placed(a: &Placed, b: &Placed) -> Penetration {
    if (a.center - b.center).norm() >= a.radius + b.radius {
        return Penetration::NONE;
    }
    let mut best = Penetration::NONE;
    for pa in &a.parts {
        for pb in &b.parts {
            let p = part_penetration(pa, pb);
            if p.depth > best.depth {
                best = p;
            }
        }
    }
    best
}

fn part_penetration(a: &Part, b: &Part) -> Penetration {
    match (a, b) {
        (Part::Circle { center: ca, radius: ra }, Part::Circle { center: cb, radius: rb }) => {
            circle_circle(*ca, *ra, *cb, *rb)
        }
        (Part::Circle { center, radius }, Part::Polygon(p)) => circle_polygon(*center, *radius, p),
        (Part::Polygon(p), Part::Circle { center, radius }) => {
            circle_polygon(*center, *radius, p).flipped()
        }
        (Part::Polygon(p), Part::Polygon(q)) => polygon_polygon(p, q),
    }
}

fn circle_circle(ca: Vec2, ra: f64, cb: Vec2, rb: f64) -> Penetration {
    let d = ca - cb;
    let dist = d.norm();
    let depth = ra + rb - dist;
    if depth <= 0.0 {
        return Penetration::NONE;
    }
    // Coincident centres have no preferred axis; callers that need to break
    // the symmetry detect the coincidence themselves.
    let direction = if dist > 0.0 {
        d * (1.0 / dist)
    } else {
        Vec2::new(1.0, 0.0)
    };
    Penetration {
        depth,
        direction,
        contact: ca - direction * (ra - depth * 0.5),
    }
}

/// Direction is for the circle.
fn circle_polygon(c: Vec2, r: f64, poly: &ConvexPolygon) -> Penetration {
    let mut max_sep = f64::NEG_INFINITY;
    let mut max_edge = 0;
    for (i, (v, n)) in poly.vertices.iter().zip(&poly.normals).enumerate() {
        let s = (c - *v).dot(*n);
        if s > max_sep {
            max_sep = s;
            max_edge = i;
        }
    }
    if max_sep <= 0.0 {
        // Centre inside: leave through the nearest edge.
        let n = poly.normals[max_edge];
        let depth = r - max_sep;
        return Penetration {
            depth,
            direction: n,
            contact: c - n * (r - depth * 0.5),
        };
    }
    let q = poly.closest_point(c);
    let d = c - q;
    let dist = d.norm();
    let depth = r - dist;
    if depth <= 0.0 {
        return Penetration::NONE;
    }
    let direction = d * (1.0 / dist);
    Penetration {
        depth,
        direction,
        contact: c - direction * (r - depth * 0.5),
    }
}

fn polygon_polygon(a: &ConvexPolygon, b: &ConvexPolygon) -> Penetration {
    let mut depth = f64::INFINITY;
    let mut direction = Vec2::ZERO;
    let axes = a.axes.iter().map(|&i| a.normals[i]);
    for n in axes.chain(b.axes.iter().map(|&i| b.normals[i])) {
        let (alo, ahi) = a.project(n);
        let (blo, bhi) = b.project(n);
        let push_back = ahi - blo; // move a along -n
        let push_fwd = bhi - alo; // move a along +n
        if push_back <= 0.0 || push_fwd <= 0.0 {
            return Penetration::NONE;
        }
        if push_back < depth {
            depth = push_back;
            direction = -n;
        }
        if push_fwd < depth {
            depth = push_fwd;
            direction = n;
        }
    }
    Penetration {
        depth,
        direction,
        contact: overlap_center(a, b),
    }
}

/// Centroid of the intersection of two convex polygons (Sutherland–Hodgman).
fn overlap_center(a: &ConvexPolygon, b: &ConvexPolygon) -> Vec2 {
    let cap = a.vertices.len() + b.vertices.len();
    let mut poly = Vec::with_capacity(cap);
    poly.extend_from_slice(&a.vertices);
    let mut out = Vec::with_capacity(cap);
    for (v, n) in b.vertices.iter().zip(&b.normals) {
        if poly.is_empty() {
            break;
        }
        out.clear();
        let k = poly.len();
        for i in 0..k {
            let p = poly[i];
            let q = poly[(i + 1) % k];
            let dp = (p - *v).dot(*n);
            let dq = (q - *v).dot(*n);
            if dp <= 0.0 {
                out.push(p);
            }
            if (dp <= 0.0) != (dq <= 0.0) {
                out.push(p + (q - p) * (dp / (dp - dq)));
            }
        }
        std::mem::swap(&mut poly, &mut out);
    }
    if poly.is_empty() {
        return (a.centroid() + b.centroid()) * 0.5;
    }
    let area = signed_area(&poly);
    if area.abs() < 1e-18 {
        return poly.iter().fold(Vec2::ZERO, |s, p| s + *p) * (1.0 / poly.len() as f64);
    }
    area_centroid(&poly)
}

/// Convex support surface (or placement region) in world coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Surface {
    Polygon(ConvexPolygon),
    Circle { center: Vec2, radius: f64 },
}

impl Surface {
    /// Builds a surface from a single-part footprint placed at `pose`,
    /// without re-centering.
    pub fn from_part(part: &Part, pose: &Pose) -> Result<Surface, GeometryError> {
        match part.transformed(pose) {
            Part::Circle { center, radius } => Ok(Surface::Circle { center, radius }),
            Part::Polygon(p) => Ok(Surface::Polygon(p)),
        }
    }

    pub fn polygon(vertices: Vec<Vec2>) -> Result<Surface, GeometryError> {
        Ok(Surface::Polygon(ConvexPolygon::validated(vertices, 0)?))
    }

    pub fn rectangle(min: Vec2, max: Vec2) -> Surface {
        Surface::Polygon(ConvexPolygon::from_ccw(vec![
            min,
            Vec2::new(max.x, min.y),
            max,
            Vec2::new(min.x, max.y),
        ]))
    }

    pub fn as_part(&self) -> Part {
        match self {
            Surface::Polygon(p) => Part::Polygon(p.clone()),
            Surface::Circle { center, radius } => Part::Circle {
                center: *center,
                radius: *radius,
            },
        }
    }

    pub fn area(&self) -> f64 {
        self.as_part().area()
    }

    pub fn centroid(&self) -> Vec2 {
        self.as_part().centroid()
    }

    pub fn bounds(&self) -> (Vec2, Vec2) {
        match self {
            Surface::Polygon(p) => {
                let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in &p.vertices {
                    lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
                    hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
                }
                (lo, hi)
            }
            Surface::Circle { center, radius } => (
                *center - Vec2::new(*radius, *radius),
                *center + Vec2::new(*radius, *radius),
            ),
        }
    }

    /// Largest distance between two points of the surface.
    pub fn diameter(&self) -> f64 {
        match self {
            Surface::Polygon(p) => {
                let vs = &p.vertices;
                let mut d: f64 = 0.0;
                for i in 0..vs.len() {
                    for j in i + 1..vs.len() {
                        d = d.max((vs[i] - vs[j]).norm());
                    }
                }
                d
            }
            Surface::Circle { radius, .. } => 2.0 * radius,
        }
    }

    /// Distance from `p` to the farthest point of the surface.
    pub fn farthest_distance(&self, p: Vec2) -> f64 {
        match self {
            Surface::Polygon(poly) => poly
                .vertices
                .iter()
                .map(|v| (*v - p).norm())
                .fold(0.0, f64::max),
            Surface::Circle { center, radius } => (*center - p).norm() + radius,
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Surface::Polygon(poly) => poly.contains(p),
            Surface::Circle { center, radius } => (p - *center).norm() <= *radius,
        }
    }

    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        match self {
            Surface::Polygon(poly) => poly.closest_point(p),
            Surface::Circle { center, radius } => {
                let d = p - *center;
                let n = d.norm();
                if n <= *radius {
                    p
                } else {
                    *center + d * (radius / n)
                }
            }
        }
    }
}

/// How far a placed footprint sticks out of `surface`; direction points inward.
pub fn boundary_penetration(obj: &Footprint, pose: &Pose, surface: &Surface) -> Penetration {
    boundary_penetration_placed(&obj.place(pose), surface)
}

pub fn boundary_penetration_placed(obj: &Placed, surface: &Surface) -> Penetration {
    let mut best = Penetration::NONE;
    match surface {
        Surface::Polygon(poly) => {
            for (v, n) in poly.vertices.iter().zip(&poly.normals) {
                let offset = v.dot(*n);
                if obj.center.dot(*n) + obj.radius <= offset {
                    continue;
                }
                for part in &obj.parts {
                    let (p, proj) = part.support(*n);
                    let excess = proj - offset;
                    if excess > best.depth {
                        best = Penetration {
                            depth: excess,
                            direction: -*n,
                            contact: p,
                        };
                    }
                }
            }
        }
        Surface::Circle { center, radius } => {
            if (obj.center - *center).norm() + obj.radius <= *radius {
                return best;
            }
            for part in &obj.parts {
                let (p, excess) = match part {
                    Part::Circle { center: c, radius: r } => {
                        let d = (*c - *center).normalized();
                        (*c + d * *r, (*c - *center).norm() + r - radius)
                    }
                    Part::Polygon(poly) => poly
                        .vertices
                        .iter()
                        .map(|v| (*v, (*v - *center).norm() - radius))
                        .fold((Vec2::ZERO, f64::NEG_INFINITY), |acc, x| {
                            if x.1 > acc.1 {
                                x
                            } else {
                                acc
                            }
                        }),
                };
                if excess > best.depth {
                    let inward = (*center - p).normalized();
                    best = Penetration {
                        depth: excess,
                        direction: if inward == Vec2::ZERO {
                            Vec2::new(1.0, 0.0)
                        } else {
                            inward
                        },
                        contact: p,
                    };
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn angle_wraps_into_half_open_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert!(close(normalize_angle(-PI), PI, 1e-15));
        assert!(close(normalize_angle(3.0 * PI), PI, 1e-12));
        assert!(close(normalize_angle(7.0), 7.0 - 2.0 * PI, 1e-12));
        assert_eq!(normalize_angle(0.3), 0.3);
    }

    #[test]
    fn pose_compose_inverse_is_identity() {
        let p = Pose::new(1.5, -2.0, 2.9);
        let id = p.compose(&p.inverse());
        assert!(close(id.x, 0.0, 1e-9) && close(id.y, 0.0, 1e-9) && close(id.theta, 0.0, 1e-9));
        let id = p.inverse().compose(&p);
        assert!(close(id.x, 0.0, 1e-9) && close(id.y, 0.0, 1e-9) && close(id.theta, 0.0, 1e-9));
    }

    #[test]
    fn circles_overlapping() {
        let c = Footprint::circle(0.75);
        let p = penetration(&c, &Pose::new(0.0, 0.0, 0.0), &c, &Pose::new(1.0, 0.0, 0.0));
        assert!(close(p.depth, 0.5, 1e-12));
        assert!(close(p.direction.x, -1.0, 1e-12));
    }

    #[test]
    fn disjoint_and_touching_circles() {
        let c = Footprint::circle(1.0);
        let p = penetration(&c, &Pose::IDENTITY, &c, &Pose::new(3.0, 0.0, 0.0));
        assert_eq!(p.depth, 0.0);
        assert_eq!(p.direction, Vec2::ZERO);
        assert!(!in_collision(&c, &Pose::IDENTITY, &c, &Pose::new(2.0, 0.0, 0.0), 1e-9));
    }

    #[test]
    fn coincident_unit_squares() {
        let s = Footprint::square(1.0);
        let p = penetration(&s, &Pose::IDENTITY, &s, &Pose::IDENTITY);
        assert!(close(p.depth, 1.0, 1e-12));
    }

    #[test]
    fn offset_unit_squares() {
        let s = Footprint::square(1.0);
        let b = Pose::new(0.8, 0.0, 0.0);
        let p = penetration(&s, &Pose::IDENTITY, &s, &b);
        assert!(close(p.depth, 0.2, 1e-12));
        assert!(close(p.direction.x, -1.0, 1e-12) && close(p.direction.y, 0.0, 1e-12));
        assert!(in_collision(&s, &Pose::IDENTITY, &s, &b, 1e-9));
        assert!(!in_collision(&s, &Pose::IDENTITY, &s, &b, 0.25));
    }

    #[test]
    fn circle_inside_square_leaves_through_nearest_edge() {
        let c = Footprint::circle(0.1);
        let s = Footprint::square(1.0);
        let p = penetration(&c, &Pose::new(0.3, 0.1, 0.0), &s, &Pose::IDENTITY);
        assert!(close(p.depth, 0.3, 1e-12));
        assert!(close(p.direction.x, 1.0, 1e-12));
        let q = penetration(&s, &Pose::IDENTITY, &c, &Pose::new(0.3, 0.1, 0.0));
        assert!(close(q.depth, 0.3, 1e-12));
        assert!(close(q.direction.x, -1.0, 1e-12));
    }

    #[test]
    fn circle_near_square_corner() {
        let c = Footprint::circle(0.5);
        let s = Footprint::square(1.0);
        // Centre 0.3 beyond the corner along the diagonal.
        let d = 0.3 / 2f64.sqrt();
        let p = penetration(&c, &Pose::new(0.5 + d, 0.5 + d, 0.0), &s, &Pose::IDENTITY);
        assert!(close(p.depth, 0.2, 1e-12));
    }

    #[test]
    fn boundary_cases() {
        let surface = Surface::rectangle(Vec2::new(-5.0, -5.0), Vec2::new(5.0, 5.0));
        let c = Footprint::circle(1.0);
        let p = boundary_penetration(&c, &Pose::new(5.0, 0.0, 0.0), &surface);
        assert!(close(p.depth, 1.0, 1e-12));
        assert!(close(p.direction.x, -1.0, 1e-12));
        assert_eq!(boundary_penetration(&c, &Pose::new(1.0, 1.0, 0.3), &surface).depth, 0.0);
        let sq = Footprint::square(2.0);
        let p = boundary_penetration(&sq, &Pose::new(5.0, 5.0, 0.0), &surface);
        assert!(close(p.depth, 1.0, 1e-12));
    }

    #[test]
    fn circular_surface_boundary() {
        let surface = Surface::Circle {
            center: Vec2::ZERO,
            radius: 3.0,
        };
        let sq = Footprint::square(1.0);
        let p = boundary_penetration(&sq, &Pose::new(2.5, 0.0, 0.0), &surface);
        assert!(close(p.depth, (3.0f64.powi(2) + 0.25).sqrt() - 3.0, 1e-12));
        assert!(p.direction.x < 0.0);
    }

    #[test]
    fn distal_radius_examples() {
        assert!(close(Footprint::circle(2.0).distal_radius(), 2.0, 1e-15));
        assert!(close(Footprint::square(1.0).distal_radius(), 0.5f64.sqrt(), 1e-12));
    }

    #[test]
    fn footprint_recentres_on_union_centroid() {
        let f = Footprint::polygon(vec![
            Vec2::new(2.0, 2.0),
            Vec2::new(4.0, 2.0),
            Vec2::new(4.0, 3.0),
            Vec2::new(2.0, 3.0),
        ])
        .unwrap();
        let c = f.parts()[0].centroid();
        assert!(c.norm() < 1e-12);
        assert!(close(f.area(), 2.0, 1e-12));
    }

    #[test]
    fn clockwise_polygons_are_reoriented() {
        let f = Footprint::polygon(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
        ])
        .unwrap();
        assert!(close(f.area(), 1.0, 1e-12));
    }

    #[test]
    fn invalid_footprints_rejected() {
        assert_eq!(Footprint::new(vec![]), Err(GeometryError::Empty));
        let collinear = Footprint::polygon(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 1.0),
        ]);
        assert!(matches!(collinear, Err(GeometryError::NotConvex { .. })));
        let two = Footprint::polygon(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]);
        assert!(matches!(two, Err(GeometryError::TooFewVertices { .. })));
        let apart = Footprint::new(vec![
            Part::circle(Vec2::ZERO, 1.0),
            Part::circle(Vec2::new(5.0, 0.0), 1.0),
        ]);
        assert!(matches!(apart, Err(GeometryError::Disconnected { part: 1 })));
        let neg = Footprint::new(vec![Part::circle(Vec2::ZERO, -1.0)]);
        assert!(matches!(neg, Err(GeometryError::BadRadius { .. })));
    }

    #[test]
    fn touching_parts_form_a_union() {
        let a = Part::polygon(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        let b = Part::polygon(vec![
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 1.0),
            Vec2::new(1.0, 1.0),
        ])
        .unwrap();
        let f = Footprint::new(vec![a, b]).unwrap();
        assert!(close(f.area(), 2.0, 1e-12));
        assert!(close(f.distal_radius(), (1.0f64 + 0.25).sqrt(), 1e-12));
    }

    #[test]
    fn union_penetration_takes_deepest_part_pair() {
        // Two-square bar versus a small square overlapping its right half.
        let bar = Footprint::new(vec![
            Part::polygon(vec![
                Vec2::new(-1.0, -0.5),
                Vec2::new(0.0, -0.5),
                Vec2::new(0.0, 0.5),
                Vec2::new(-1.0, 0.5),
            ])
            .unwrap(),
            Part::polygon(vec![
                Vec2::new(0.0, -0.5),
                Vec2::new(1.0, -0.5),
                Vec2::new(1.0, 0.5),
                Vec2::new(0.0, 0.5),
            ])
            .unwrap(),
        ])
        .unwrap();
        let small = Footprint::square(0.5);
        let p = penetration(&small, &Pose::new(0.9, 0.0, 0.0), &bar, &Pose::IDENTITY);
        assert!(close(p.depth, 0.35, 1e-12));
        assert!(close(p.direction.x, 1.0, 1e-12));
    }
}
