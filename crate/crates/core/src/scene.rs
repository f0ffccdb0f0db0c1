//! Problem instances, configurations and the cost functions the searches
//! optimize.

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    angle_diff, boundary_penetration_placed, normalize_angle, penetration_placed, Footprint,
    GeometryError, Penetration, Placed, Pose, Surface, Vec2, CONTACT_TOL,
};

/// Tolerance for equality of real-valued cost components.
pub const COST_TOL: f64 = 1e-9;
/// Orientation change (radians) below which a movable is not considered moved.
pub const MOVE_ANGLE_EPS: f64 = 1e-5;
/// Position change, relative to the surface diameter, below which a movable
/// is not considered moved.
pub const MOVE_POSITION_EPS: f64 = 1e-5;

const SAMPLE_ATTEMPTS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("duplicate object id `{0}`")]
    DuplicateId(String),
    #[error("no pose for object `{0}`")]
    MissingPose(String),
    #[error("new object `{0}` must not have an initial pose")]
    UnexpectedPose(String),
    #[error("initial configuration has `{0}` colliding with `{1}`")]
    InitialCollision(String, String),
    #[error("initial pose of `{0}` overhangs the surface")]
    InitialOverhang(String),
    #[error("initial pose of `{0}` violates its region")]
    RegionViolated(String),
    #[error("object `{0}` is not movable")]
    NotMovable(String),
    #[error("unknown object id `{0}`")]
    UnknownId(String),
    #[error("placement region of `{0}` has empty interior")]
    InfeasibleConstraint(String),
    #[error("configuration covers {got} objects, scene has {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Obstacle,
    Movable,
    New,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub author: String,
    #[serde(default)]
    pub units: String,
}

/// Placement constraint: the object's centroid must lie in `area`.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub area: Surface,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectRecord {
    pub id: String,
    pub kind: ObjectKind,
    pub footprint: Footprint,
    pub region: Option<Region>,
}

/// Poses indexed like `Scene::objects`. `None` marks a new object that has
/// not been placed yet.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    poses: Vec<Option<Pose>>,
}

impl Configuration {
    pub fn new(poses: Vec<Option<Pose>>) -> Self {
        Configuration { poses }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<Pose> {
        self.poses.get(index).copied().flatten()
    }

    pub fn set(&mut self, index: usize, pose: Pose) {
        self.poses[index] = Some(pose);
    }

    pub fn poses(&self) -> &[Option<Pose>] {
        &self.poses
    }
}

/// Per-movable ball radii, normalized to `[0, 1]` of `max_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacementBalls {
    radii: Vec<Option<f64>>,
}

impl PlacementBalls {
    pub fn uniform(scene: &Scene, radius: f64) -> Self {
        let r = radius.clamp(0.0, 1.0);
        PlacementBalls {
            radii: scene
                .objects
                .iter()
                .map(|o| (o.kind == ObjectKind::Movable).then_some(r))
                .collect(),
        }
    }

    /// Every movable frozen at its initial pose.
    pub fn frozen(scene: &Scene) -> Self {
        PlacementBalls::uniform(scene, 0.0)
    }

    /// Every movable free to go anywhere on the surface.
    pub fn free(scene: &Scene) -> Self {
        PlacementBalls::uniform(scene, 1.0)
    }

    /// Radius of a movable; `None` for other kinds.
    pub fn radius(&self, index: usize) -> Option<f64> {
        self.radii.get(index).copied().flatten()
    }

    /// Sets a movable's radius, clamped to `[0, 1]`.
    pub fn set(&mut self, scene: &Scene, index: usize, radius: f64) -> Result<(), SceneError> {
        match self.radii.get_mut(index) {
            Some(Some(r)) => {
                *r = radius.clamp(0.0, 1.0);
                Ok(())
            }
            Some(None) => Err(SceneError::NotMovable(scene.objects[index].id.clone())),
            None => Err(SceneError::UnknownId(format!("#{index}"))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.radii
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|r| (i, r)))
    }

    pub fn is_frozen(&self, index: usize) -> bool {
        self.radius(index) == Some(0.0)
    }
}

/// `⟨#col, cost_p⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostC {
    pub col_count: usize,
    pub pen_sum: f64,
}

impl CostC {
    pub fn as_tuple(&self) -> [f64; 2] {
        [self.col_count as f64, self.pen_sum]
    }

    pub fn precedes(&self, other: &CostC) -> bool {
        lex_less(&self.as_tuple(), &other.as_tuple())
    }
}

/// `⟨#col, #move, cost_d⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostR {
    pub col_count: usize,
    pub move_count: usize,
    pub change_sum: f64,
}

impl CostR {
    pub fn as_tuple(&self) -> [f64; 3] {
        [self.col_count as f64, self.move_count as f64, self.change_sum]
    }

    pub fn precedes(&self, other: &CostR) -> bool {
        lex_less(&self.as_tuple(), &other.as_tuple())
    }
}

/// Strict lexicographic order. Components within [`COST_TOL`] compare equal.
///
/// Panics if the tuples differ in length.
pub fn lex_less(a: &[f64], b: &[f64]) -> bool {
    assert_eq!(a.len(), b.len(), "cost tuples of different arity");
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() <= COST_TOL {
            continue;
        }
        return x < y;
    }
    false
}

/// A colliding pair, `a < b`; the penetration moves `a` out of `b`.
#[derive(Clone, Copy, Debug)]
pub struct PairContact {
    pub a: usize,
    pub b: usize,
    pub pen: Penetration,
}

/// All overlaps deeper than the contact tolerance in a configuration.
#[derive(Clone, Debug, Default)]
pub struct Contacts {
    pub pairs: Vec<PairContact>,
    pub boundary: Vec<(usize, Penetration)>,
}

impl Contacts {
    pub fn col_count(&self) -> usize {
        self.pairs.len() + self.boundary.len()
    }

    pub fn pen_sum(&self) -> f64 {
        // An empty f64 sum is -0.0.
        0.0 + self.pairs.iter().map(|c| c.pen.depth).sum::<f64>()
            + self.boundary.iter().map(|(_, p)| p.depth).sum::<f64>()
    }

    pub fn cost_c(&self) -> CostC {
        CostC {
            col_count: self.col_count(),
            pen_sum: self.pen_sum(),
        }
    }

    /// Objects taking part in at least one collision, ascending.
    pub fn colliding_objects(&self, n: usize) -> Vec<usize> {
        let mut hit = vec![false; n];
        for c in &self.pairs {
            hit[c.a] = true;
            hit[c.b] = true;
        }
        for (i, _) in &self.boundary {
            hit[*i] = true;
        }
        (0..n).filter(|&i| hit[i]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub meta: Meta,
    pub surface: Surface,
    pub objects: Vec<ObjectRecord>,
    initial: Configuration,
    max_d: Vec<f64>,
    diameter: f64,
}

impl Scene {
    /// Validates ids, initial poses, containment and collision-freeness.
    pub fn new(
        meta: Meta,
        surface: Surface,
        objects: Vec<ObjectRecord>,
        initial: Configuration,
    ) -> Result<Scene, SceneError> {
        if initial.len() != objects.len() {
            return Err(SceneError::SizeMismatch {
                expected: objects.len(),
                got: initial.len(),
            });
        }
        let mut ids = HashSet::new();
        for (i, o) in objects.iter().enumerate() {
            if !ids.insert(o.id.as_str()) {
                return Err(SceneError::DuplicateId(o.id.clone()));
            }
            match (o.kind, initial.get(i)) {
                (ObjectKind::New, Some(_)) => return Err(SceneError::UnexpectedPose(o.id.clone())),
                (ObjectKind::New, None) => {}
                (_, None) => return Err(SceneError::MissingPose(o.id.clone())),
                (_, Some(pose)) => {
                    if let Some(region) = &o.region {
                        if !region_holds(region, pose.position()) {
                            return Err(SceneError::RegionViolated(o.id.clone()));
                        }
                    }
                }
            }
            if let Some(region) = &o.region {
                if region.area.area() <= 0.0 {
                    return Err(SceneError::InfeasibleConstraint(o.id.clone()));
                }
            }
        }
        let max_d = objects
            .iter()
            .enumerate()
            .map(|(i, _)| {
                initial
                    .get(i)
                    .map(|p| surface.farthest_distance(p.position()))
                    .unwrap_or(0.0)
            })
            .collect();
        let diameter = surface.diameter();
        let scene = Scene {
            meta,
            surface,
            objects,
            initial,
            max_d,
            diameter,
        };
        let contacts = scene.contacts(&scene.initial)?;
        if let Some(c) = contacts.pairs.first() {
            return Err(SceneError::InitialCollision(
                scene.objects[c.a].id.clone(),
                scene.objects[c.b].id.clone(),
            ));
        }
        if let Some((i, _)) = contacts.boundary.first() {
            return Err(SceneError::InitialOverhang(scene.objects[*i].id.clone()));
        }
        Ok(scene)
    }

    /// `C_I`: obstacles and movables at their initial poses, new objects unplaced.
    pub fn initial(&self) -> &Configuration {
        &self.initial
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn kind(&self, index: usize) -> ObjectKind {
        self.objects[index].kind
    }

    pub fn indices_of(&self, kind: ObjectKind) -> impl Iterator<Item = usize> + '_ {
        self.objects
            .iter()
            .enumerate()
            .filter(move |(_, o)| o.kind == kind)
            .map(|(i, _)| i)
    }

    /// Distance from the object's initial centroid to the farthest surface point.
    pub fn max_d(&self, index: usize) -> f64 {
        self.max_d[index]
    }

    pub fn surface_diameter(&self) -> f64 {
        self.diameter
    }

    /// Summed footprint area of all objects over surface area.
    pub fn coverage(&self) -> f64 {
        self.objects.iter().map(|o| o.footprint.area()).sum::<f64>() / self.surface.area()
    }

    /// World-frame footprints; errors if an obstacle or movable is unplaced.
    pub fn place_all(&self, config: &Configuration) -> Result<Vec<Option<Placed>>, SceneError> {
        if config.len() != self.objects.len() {
            return Err(SceneError::SizeMismatch {
                expected: self.objects.len(),
                got: config.len(),
            });
        }
        self.objects
            .iter()
            .enumerate()
            .map(|(i, o)| match (config.get(i), o.kind) {
                (Some(p), _) => Ok(Some(o.footprint.place(&p))),
                (None, ObjectKind::New) => Ok(None),
                (None, _) => Err(SceneError::MissingPose(o.id.clone())),
            })
            .collect()
    }

    /// Every pair and boundary overlap deeper than [`CONTACT_TOL`].
    pub fn contacts(&self, config: &Configuration) -> Result<Contacts, SceneError> {
        let placed = self.place_all(config)?;
        Ok(contacts_of(&self.surface, &placed))
    }

    /// Fails unless every object, new ones included, has a pose.
    pub fn require_complete(&self, config: &Configuration) -> Result<(), SceneError> {
        if config.len() != self.objects.len() {
            return Err(SceneError::SizeMismatch {
                expected: self.objects.len(),
                got: config.len(),
            });
        }
        match (0..self.len()).find(|&i| config.get(i).is_none()) {
            Some(i) => Err(SceneError::MissingPose(self.objects[i].id.clone())),
            None => Ok(()),
        }
    }
}

pub(crate) fn contacts_of(surface: &Surface, placed: &[Option<Placed>]) -> Contacts {
    let mut out = Contacts::default();
    for i in 0..placed.len() {
        let Some(a) = &placed[i] else { continue };
        for (j, b) in placed.iter().enumerate().skip(i + 1) {
            let Some(b) = b else { continue };
            let pen = penetration_placed(a, b);
            if pen.depth > CONTACT_TOL {
                out.pairs.push(PairContact { a: i, b: j, pen });
            }
        }
        let pen = boundary_penetration_placed(a, surface);
        if pen.depth > CONTACT_TOL {
            out.boundary.push((i, pen));
        }
    }
    out
}

fn region_holds(region: &Region, p: Vec2) -> bool {
    let q = region.area.closest_point(p);
    (q - p).norm() <= COST_TOL
}

/// Number of colliding pairs plus objects overhanging the surface.
pub fn count_collisions(scene: &Scene, config: &Configuration) -> Result<usize, SceneError> {
    Ok(scene.contacts(config)?.col_count())
}

/// Summed penetration depth of colliding pairs and boundary overhangs.
pub fn cost_p(scene: &Scene, config: &Configuration) -> Result<f64, SceneError> {
    Ok(scene.contacts(config)?.pen_sum())
}

pub fn cost_c(scene: &Scene, config: &Configuration) -> Result<CostC, SceneError> {
    Ok(scene.contacts(config)?.cost_c())
}

fn movable_poses<'a>(
    scene: &'a Scene,
    config: &'a Configuration,
) -> impl Iterator<Item = Result<(usize, Pose, Pose), SceneError>> + 'a {
    scene.indices_of(ObjectKind::Movable).map(move |i| {
        let now = config
            .get(i)
            .ok_or_else(|| SceneError::MissingPose(scene.objects[i].id.clone()))?;
        let init = scene.initial.get(i).expect("movables have initial poses");
        Ok((i, init, now))
    })
}

/// Movables whose pose differs from `C_I` beyond the displacement epsilons.
pub fn count_moves(scene: &Scene, config: &Configuration) -> Result<usize, SceneError> {
    let pos_eps = MOVE_POSITION_EPS * scene.diameter;
    let mut n = 0;
    for item in movable_poses(scene, config) {
        let (_, init, now) = item?;
        let moved = (now.position() - init.position()).norm() > pos_eps
            || angle_diff(init.theta, now.theta).abs() > MOVE_ANGLE_EPS;
        n += moved as usize;
    }
    Ok(n)
}

/// Centroid displacement plus distal-point arc length, summed over movables.
pub fn cost_d(scene: &Scene, config: &Configuration) -> Result<f64, SceneError> {
    let mut total = 0.0;
    for item in movable_poses(scene, config) {
        let (i, init, now) = item?;
        let dist = (now.position() - init.position()).norm();
        let arc = scene.objects[i].footprint.distal_radius() * angle_diff(init.theta, now.theta).abs();
        total += dist + arc;
    }
    Ok(total)
}

pub fn cost_r(scene: &Scene, config: &Configuration) -> Result<CostR, SceneError> {
    Ok(CostR {
        col_count: count_collisions(scene, config)?,
        move_count: count_moves(scene, config)?,
        change_sum: cost_d(scene, config)?,
    })
}

/// Collision-free, contained, and every region constraint holds.
pub fn is_solution(scene: &Scene, config: &Configuration) -> Result<bool, SceneError> {
    scene.require_complete(config)?;
    if count_collisions(scene, config)? > 0 {
        return Ok(false);
    }
    Ok(scene.objects.iter().enumerate().all(|(i, o)| match &o.region {
        Some(r) => region_holds(r, config.get(i).expect("complete").position()),
        None => true,
    }))
}

/// `C_I` extended with a uniformly random pose for each new object.
pub fn random_place_new<R: Rng + ?Sized>(
    scene: &Scene,
    rng: &mut R,
) -> Result<Configuration, SceneError> {
    let mut config = scene.initial.clone();
    for i in scene.indices_of(ObjectKind::New).collect::<Vec<_>>() {
        let o = &scene.objects[i];
        let area = match &o.region {
            Some(r) => {
                if r.area.area() <= 0.0 {
                    return Err(SceneError::InfeasibleConstraint(o.id.clone()));
                }
                &r.area
            }
            None => &scene.surface,
        };
        let p = sample_point(area, rng)
            .ok_or_else(|| SceneError::InfeasibleConstraint(o.id.clone()))?;
        config.set(i, Pose::from_position(p, random_angle(rng)));
    }
    Ok(config)
}

/// Uniform angle in `(-π, π]`.
pub fn random_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    normalize_angle(rng.gen_range(-PI..PI))
}

/// Uniform point inside a convex area by rejection from its bounding box.
pub fn sample_point<R: Rng + ?Sized>(area: &Surface, rng: &mut R) -> Option<Vec2> {
    let (lo, hi) = area.bounds();
    if !(hi.x > lo.x && hi.y > lo.y) {
        return None;
    }
    (0..SAMPLE_ATTEMPTS)
        .map(|_| Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y)))
        .find(|p| area.contains(*p))
}

/// True iff every movable's centroid is inside its placement ball.
pub fn ball_satisfied(scene: &Scene, balls: &PlacementBalls, config: &Configuration) -> bool {
    balls.iter().all(|(i, r)| {
        let (Some(now), Some(init)) = (config.get(i), scene.initial.get(i)) else {
            return false;
        };
        let d = (now.position() - init.position()).norm();
        d <= r * scene.max_d[i] * (1.0 + 1e-12) + 1e-12
    })
}

/// Nearest pose whose centroid lies inside the object's placement ball.
/// A zero radius snaps back to the initial pose, orientation included.
pub fn project_to_ball(
    scene: &Scene,
    balls: &PlacementBalls,
    index: usize,
    pose: Pose,
) -> Result<Pose, SceneError> {
    let Some(r) = balls.radius(index) else {
        return Err(match scene.objects.get(index) {
            Some(o) => SceneError::NotMovable(o.id.clone()),
            None => SceneError::UnknownId(format!("#{index}")),
        });
    };
    let init = scene.initial.get(index).expect("movables have initial poses");
    if r == 0.0 {
        return Ok(init);
    }
    let limit = r * scene.max_d[index];
    let d = pose.position() - init.position();
    let n = d.norm();
    if n <= limit {
        return Ok(pose);
    }
    Ok(pose.with_position(init.position() + d * (limit / n)))
}

/// Clamps the centroid into the object's region, if it has one.
pub fn project_to_region(scene: &Scene, index: usize, pose: Pose) -> Pose {
    match &scene.objects[index].region {
        Some(r) => pose.with_position(r.area.closest_point(pose.position())),
        None => pose,
    }
}

/// Applies ball then region projection. Obstacles snap to `C_I`.
pub fn project_constraints(scene: &Scene, balls: &PlacementBalls, index: usize, pose: Pose) -> Pose {
    match scene.objects[index].kind {
        ObjectKind::Obstacle => scene.initial.get(index).expect("obstacle pose"),
        ObjectKind::Movable => {
            let p = project_to_ball(scene, balls, index, pose).expect("movable");
            if balls.is_frozen(index) {
                p
            } else {
                project_to_region(scene, index, p)
            }
        }
        ObjectKind::New => project_to_region(scene, index, pose),
    }
}

/// Incremental construction of scenes, mostly for tests and generators.
#[derive(Default)]
pub struct SceneBuilder {
    meta: Meta,
    objects: Vec<ObjectRecord>,
    poses: Vec<Option<Pose>>,
}

impl SceneBuilder {
    pub fn new(name: &str) -> Self {
        SceneBuilder {
            meta: Meta {
                name: name.to_string(),
                ..Meta::default()
            },
            ..Default::default()
        }
    }

    pub fn meta(mut self, meta: Meta) -> Self {
        self.meta = meta;
        self
    }

    pub fn object(
        mut self,
        id: impl Into<String>,
        kind: ObjectKind,
        footprint: Footprint,
        pose: Option<Pose>,
    ) -> Self {
        self.objects.push(ObjectRecord {
            id: id.into(),
            kind,
            footprint,
            region: None,
        });
        self.poses.push(pose);
        self
    }

    pub fn obstacle(self, id: impl Into<String>, footprint: Footprint, pose: Pose) -> Self {
        self.object(id, ObjectKind::Obstacle, footprint, Some(pose))
    }

    pub fn movable(self, id: impl Into<String>, footprint: Footprint, pose: Pose) -> Self {
        self.object(id, ObjectKind::Movable, footprint, Some(pose))
    }

    pub fn new_object(self, id: impl Into<String>, footprint: Footprint) -> Self {
        self.object(id, ObjectKind::New, footprint, None)
    }

    /// Attaches a region constraint to the most recently added object.
    pub fn with_region(mut self, area: Surface) -> Self {
        if let Some(o) = self.objects.last_mut() {
            o.region = Some(Region { area });
        }
        self
    }

    pub fn build(self, surface: Surface) -> Result<Scene, SceneError> {
        Scene::new(self.meta, surface, self.objects, Configuration::new(self.poses))
    }
}
