//! Experiment and benchmark scene generators, and the seeded trial harness.
//!
//! Experiment scenes are cut from a random guillotine tiling of the unit
//! square. Each tile holds one or two basic shapes, so shrinking every shape
//! about its own centroid leaves a known collision-free arrangement. Initial
//! objects are then jittered away from their tiles by rejection sampling.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    boundary_penetration, penetration, Footprint, GeometryError, Part, Pose, Surface, Vec2,
    CONTACT_TOL,
};
use crate::scene::{count_moves, ObjectKind, Scene, SceneBuilder, SceneError};
use crate::search::{solve, Algorithm, SearchBudget, SearchError, SearchParams};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment: {0}")]
    BadSpec(String),
    #[error("generation infeasible: {0}")]
    Infeasible(String),
    #[error("unknown benchmark `{0}` (expected confined, tight, elongated or lshape2d)")]
    UnknownBenchmark(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("writing table: {0}")]
    Csv(#[from] csv::Error),
}

/// Which object population grows with the coverage target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// 1 obstacle and 4 movables fixed; new objects grow.
    NewObjects,
    /// 1 obstacle and 4 new objects fixed; movables grow.
    InitialMovables,
    /// 4 movables and 4 new objects fixed; obstacles grow.
    Obstacles,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::NewObjects, Variant::InitialMovables, Variant::Obstacles];

    pub fn name(self) -> &'static str {
        match self {
            Variant::NewObjects => "new_objects",
            Variant::InitialMovables => "initial_movables",
            Variant::Obstacles => "obstacles",
        }
    }

    fn fixed(self) -> &'static [ObjectKind] {
        use ObjectKind::*;
        match self {
            Variant::NewObjects => &[Obstacle, Movable, Movable, Movable, Movable],
            Variant::InitialMovables => &[Obstacle, New, New, New, New],
            Variant::Obstacles => &[Movable, Movable, Movable, Movable, New, New, New, New],
        }
    }

    fn grown(self) -> ObjectKind {
        match self {
            Variant::NewObjects => ObjectKind::New,
            Variant::InitialMovables => ObjectKind::Movable,
            Variant::Obstacles => ObjectKind::Obstacle,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == key)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

/// Algorithms, trial count and per-trial budget of a harness run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    /// Seconds per trial.
    pub timeout: f64,
    /// Trial `k` uses seed `seed + k`.
    pub seed: u64,
}

impl TrialPlan {
    fn validate(&self) -> Result<(), BenchError> {
        if self.trials == 0 {
            return Err(BenchError::BadSpec("trials must be positive".into()));
        }
        if self.timeout <= 0.0 || self.timeout.is_nan() {
            return Err(BenchError::BadSpec("timeout must be positive".into()));
        }
        if self.algorithms.is_empty() {
            return Err(BenchError::BadSpec("no algorithms".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub variant: Variant,
    pub coverage_targets: Vec<f64>,
    pub plan: TrialPlan,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.coverage_targets.is_empty() {
            return Err(BenchError::BadSpec("no coverage targets".into()));
        }
        if self.coverage_targets.iter().any(|&c| !(c > 0.0 && c <= 0.95)) {
            return Err(BenchError::BadSpec("coverage targets must lie in (0, 0.95]".into()));
        }
        if self.coverage_targets.windows(2).any(|w| w[0] > w[1]) {
            return Err(BenchError::BadSpec("coverage targets must ascend".into()));
        }
        self.plan.validate()
    }
}

/// Tiles cut from the unit square before shapes are assigned.
const TILES: usize = 18;
/// Largest linear scale of a shape relative to its tile.
const MAX_SCALE: f64 = 0.97;
/// Area budget for the fixed objects of a variant.
const FIXED_AREA: f64 = 0.2;
const JITTER: f64 = 0.3;
const JITTER_ATTEMPTS: usize = 300;
const TILING_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug)]
struct Rect {
    lo: Vec2,
    hi: Vec2,
}

impl Rect {
    fn size(&self) -> Vec2 {
        self.hi - self.lo
    }

    fn area(&self) -> f64 {
        let s = self.size();
        s.x * s.y
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Disc(f64),
    Rect(f64, f64),
    /// Vertices relative to the centroid.
    Tri([Vec2; 3]),
}

/// A shape sitting in its tile at unit scale.
#[derive(Clone, Debug)]
struct Piece {
    shape: Shape,
    center: Vec2,
}

impl Piece {
    fn area(&self) -> f64 {
        match &self.shape {
            Shape::Disc(r) => std::f64::consts::PI * r * r,
            Shape::Rect(w, h) => w * h,
            Shape::Tri(v) => 0.5 * (v[1] - v[0]).cross(v[2] - v[0]).abs(),
        }
    }

    fn label(&self) -> &'static str {
        match &self.shape {
            Shape::Disc(_) => "disc",
            Shape::Rect(w, h) if (w - h).abs() <= 1e-12 => "square",
            Shape::Rect(..) => "rect",
            Shape::Tri(_) => "tri",
        }
    }

    fn footprint(&self, scale: f64) -> Result<Footprint, GeometryError> {
        Ok(match &self.shape {
            Shape::Disc(r) => Footprint::circle(r * scale),
            Shape::Rect(w, h) => Footprint::rectangle(w * scale, h * scale),
            Shape::Tri(v) => Footprint::polygon(v.iter().map(|&p| p * scale).collect())?,
        })
    }
}

fn tiling<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<Rect> {
    let mut cells = vec![Rect {
        lo: Vec2::ZERO,
        hi: Vec2::new(1.0, 1.0),
    }];
    while cells.len() < count {
        let (i, _) = cells
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, c)| if c.area() > best.1 { (i, c.area()) } else { best });
        let c = cells.swap_remove(i);
        let t = rng.gen_range(0.4..0.6);
        let s = c.size();
        let (a, b) = if s.x >= s.y {
            let x = c.lo.x + t * s.x;
            (Rect { lo: c.lo, hi: Vec2::new(x, c.hi.y) }, Rect { lo: Vec2::new(x, c.lo.y), hi: c.hi })
        } else {
            let y = c.lo.y + t * s.y;
            (Rect { lo: c.lo, hi: Vec2::new(c.hi.x, y) }, Rect { lo: Vec2::new(c.lo.x, y), hi: c.hi })
        };
        cells.push(a);
        cells.push(b);
    }
    cells
}

/// Fills each tile with a disc, square, rectangle or triangle pair.
fn pieces_for<R: Rng + ?Sized>(cells: &[Rect], rng: &mut R) -> Vec<Piece> {
    let mut out = Vec::new();
    for c in cells {
        let s = c.size();
        let mid = (c.lo + c.hi) * 0.5;
        // Discs are rarer since they leave the tile corners empty.
        match rng.gen_range(0..8) {
            kind @ (0..=2) => {
                let side = s.x.min(s.y);
                let along_x = s.x >= s.y;
                let rest = s.x.max(s.y) - side;
                let disc = kind == 0;
                if rest < 0.3 * side && !disc {
                    out.push(Piece { shape: Shape::Rect(s.x, s.y), center: mid });
                    continue;
                }
                // Square block at one end of the tile, leftover strip as a rectangle.
                let flip = rng.gen_bool(0.5);
                let (block, strip) = if along_x {
                    let x0 = if flip { c.hi.x - side } else { c.lo.x };
                    let sx0 = if flip { c.lo.x } else { c.lo.x + side };
                    (Vec2::new(x0 + side / 2.0, mid.y), Vec2::new(sx0 + rest / 2.0, mid.y))
                } else {
                    let y0 = if flip { c.hi.y - side } else { c.lo.y };
                    let sy0 = if flip { c.lo.y } else { c.lo.y + side };
                    (Vec2::new(mid.x, y0 + side / 2.0), Vec2::new(mid.x, sy0 + rest / 2.0))
                };
                let shape = if disc { Shape::Disc(side / 2.0) } else { Shape::Rect(side, side) };
                out.push(Piece { shape, center: block });
                if rest >= 0.3 * side {
                    let (w, h) = if along_x { (rest, side) } else { (side, rest) };
                    out.push(Piece { shape: Shape::Rect(w, h), center: strip });
                }
            }
            3..=5 => out.push(Piece { shape: Shape::Rect(s.x, s.y), center: mid }),
            _ => {
                let corners = [c.lo, Vec2::new(c.hi.x, c.lo.y), c.hi, Vec2::new(c.lo.x, c.hi.y)];
                let k = rng.gen_range(0..2);
                for tri in [[0, 1, 2], [2, 3, 0]] {
                    let v = tri.map(|j| corners[(j + k) % 4]);
                    let g = (v[0] + v[1] + v[2]) * (1.0 / 3.0);
                    out.push(Piece { shape: Shape::Tri(v.map(|p| p - g)), center: g });
                }
            }
        }
    }
    out
}

#[derive(Clone)]
struct Entry {
    kind: ObjectKind,
    piece: Piece,
    footprint: Footprint,
}

fn fits(fp: &Footprint, pose: &Pose, surface: &Surface, others: &[(Footprint, Pose)]) -> bool {
    boundary_penetration(fp, pose, surface).depth <= CONTACT_TOL
        && others
            .iter()
            .all(|(f, p)| penetration(fp, pose, f, p).depth <= CONTACT_TOL)
}

/// A pose near the piece's tile clear of `blockers`, or the tile pose itself.
fn jitter<R: Rng + ?Sized>(
    e: &Entry,
    surface: &Surface,
    blockers: &[(Footprint, Pose)],
    rng: &mut R,
) -> Pose {
    for _ in 0..JITTER_ATTEMPTS {
        let r = JITTER * rng.gen::<f64>().sqrt();
        let offset = Vec2::from_angle(rng.gen_range(-PI..PI)) * r;
        let pose = Pose::from_position(e.piece.center + offset, rng.gen_range(-PI..PI));
        if fits(&e.footprint, &pose, surface, blockers) {
            return pose;
        }
    }
    tile_pose(&e.piece)
}

fn tile_pose(p: &Piece) -> Pose {
    Pose::from_position(p.center, 0.0)
}

fn tile_of(p: &Piece) -> Result<(Footprint, Pose), GeometryError> {
    Ok((p.footprint(1.0)?, tile_pose(p)))
}

/// Seats `entries[from..]` in order, obstacles first. Obstacles keep clear of
/// every tile; movables keep clear of the tiles of initial objects seated
/// after them. Either way the tiled arrangement stays reachable.
fn seat<R: Rng + ?Sized>(
    entries: &[Entry],
    poses: &mut [Option<Pose>],
    from: usize,
    later_tiles: &[(Footprint, Pose)],
    all_tiles: &[(Footprint, Pose)],
    surface: &Surface,
    rng: &mut R,
) -> Result<(), GeometryError> {
    let pending = |kind| (from..entries.len()).filter(move |&i| entries[i].kind == kind);
    let order: Vec<usize> = pending(ObjectKind::Obstacle).chain(pending(ObjectKind::Movable)).collect();
    for (rank, &i) in order.iter().enumerate() {
        let e = &entries[i];
        let mut blockers: Vec<(Footprint, Pose)> = entries
            .iter()
            .zip(poses.iter())
            .filter_map(|(o, p)| p.map(|p| (o.footprint.clone(), p)))
            .collect();
        if e.kind == ObjectKind::Obstacle {
            for (j, t) in all_tiles.iter().enumerate() {
                if j != i {
                    blockers.push(t.clone());
                }
            }
        } else {
            for &j in &order[rank + 1..] {
                blockers.push(tile_of(&entries[j].piece)?);
            }
            blockers.extend_from_slice(later_tiles);
        }
        poses[i] = Some(jitter(e, surface, &blockers, rng));
    }
    Ok(())
}

struct Drawn {
    entries: Vec<Entry>,
    grown: Vec<Piece>,
    all_tiles: Vec<(Footprint, Pose)>,
}

impl Drawn {
    fn capacity(&self) -> f64 {
        self.entries.iter().map(|e| e.footprint.area()).sum::<f64>()
            + self.grown.iter().map(Piece::area).sum::<f64>()
    }
}

/// Tiles the square and splits the pieces into the variant's fixed objects,
/// drawn from the smaller half, and the pool that grows with coverage.
fn draw_pieces<R: Rng + ?Sized>(variant: Variant, rng: &mut R) -> Result<Drawn, BenchError> {
    let mut pieces = pieces_for(&tiling(TILES, rng), rng);
    pieces.shuffle(rng);
    let fixed_kinds = variant.fixed();
    let mut by_size: Vec<usize> = (0..pieces.len()).collect();
    by_size.sort_by(|&a, &b| pieces[a].area().total_cmp(&pieces[b].area()));
    let mut small: Vec<usize> = by_size[..pieces.len() / 2].to_vec();
    small.shuffle(rng);
    small.truncate(fixed_kinds.len());
    let fixed: Vec<Piece> = small.iter().map(|&i| pieces[i].clone()).collect();
    let grown: Vec<Piece> = (0..pieces.len())
        .filter(|i| !small.contains(i))
        .map(|i| pieces[i].clone())
        .collect();
    let all_tiles = fixed
        .iter()
        .chain(&grown)
        .map(tile_of)
        .collect::<Result<Vec<_>, _>>()?;
    let fixed_unit: f64 = fixed.iter().map(Piece::area).sum();
    let fixed_scale = MAX_SCALE.min((FIXED_AREA / fixed_unit).sqrt());
    let mut entries = Vec::new();
    for (p, &kind) in fixed.iter().zip(fixed_kinds) {
        entries.push(Entry {
            kind,
            footprint: p.footprint(fixed_scale)?,
            piece: p.clone(),
        });
    }
    Ok(Drawn { entries, grown, all_tiles })
}

fn unit_square() -> Surface {
    Surface::rectangle(Vec2::ZERO, Vec2::new(1.0, 1.0))
}

/// One scene per coverage target on the unit square.
///
/// A target below the area of the fixed objects yields the fixed objects
/// alone.
pub fn gen_experiment<R: Rng + ?Sized>(
    spec: &ExperimentSpec,
    rng: &mut R,
) -> Result<Vec<Scene>, BenchError> {
    spec.validate()?;
    let surface = unit_square();
    let top = spec.coverage_targets.last().copied().unwrap_or(0.0);
    let mut drawn = None;
    for _ in 0..TILING_ATTEMPTS {
        let d = draw_pieces(spec.variant, rng)?;
        if d.capacity() >= top * surface.area() {
            drawn = Some(d);
            break;
        }
    }
    let Drawn { entries, grown, all_tiles } = drawn.ok_or_else(|| {
        BenchError::Infeasible(format!("no tiling holds coverage {top}"))
    })?;
    let fixed_area: f64 = entries.iter().map(|e| e.footprint.area()).sum();
    let grown_kind = spec.variant.grown();
    let grown_tiles: Vec<(Footprint, Pose)> = if grown_kind == ObjectKind::New {
        Vec::new()
    } else {
        grown.iter().map(tile_of).collect::<Result<_, _>>()?
    };
    let mut fixed_poses = vec![None; entries.len()];
    seat(&entries, &mut fixed_poses, 0, &grown_tiles, &all_tiles, &surface, rng)?;

    let mut scenes = Vec::new();
    for &target in &spec.coverage_targets {
        let want = (target * surface.area() - fixed_area).max(0.0);
        let (count, scale) = if want == 0.0 {
            (0, 1.0)
        } else {
            let mut unit = 0.0;
            let mut pick = None;
            for (k, p) in grown.iter().enumerate() {
                unit += p.area();
                if want / unit <= MAX_SCALE * MAX_SCALE {
                    pick = Some((k + 1, (want / unit).sqrt()));
                    break;
                }
            }
            match pick {
                Some(p) => p,
                None if want <= unit => (grown.len(), (want / unit).sqrt()),
                None => {
                    return Err(BenchError::Infeasible(format!(
                        "coverage {target} exceeds what the tiling can hold"
                    )))
                }
            }
        };
        let mut level = entries.clone();
        for p in &grown[..count] {
            level.push(Entry {
                kind: grown_kind,
                footprint: p.footprint(scale)?,
                piece: p.clone(),
            });
        }
        let mut poses = fixed_poses.clone();
        poses.resize(level.len(), None);
        seat(&level, &mut poses, entries.len(), &[], &all_tiles, &surface, rng)?;
        let mut b = SceneBuilder::new(&format!("{}-c{:.2}", spec.variant, target));
        for (i, (e, pose)) in level.into_iter().zip(poses).enumerate() {
            let id = format!("{}{}", e.piece.label(), i);
            b = b.object(id, e.kind, e.footprint, pose);
        }
        scenes.push(b.build(surface.clone())?);
    }
    Ok(scenes)
}

pub const BENCHMARKS: [&str; 4] = ["confined", "tight", "elongated", "lshape2d"];

/// The named hand-built benchmark scenes.
pub fn gen_benchmark(name: &str) -> Result<Scene, BenchError> {
    match name {
        "confined" => confined(),
        "tight" => tight(),
        "elongated" => elongated(),
        "lshape2d" => lshape2d(),
        other => Err(BenchError::UnknownBenchmark(other.to_string())),
    }
}

fn triangle(w: f64, h: f64) -> Footprint {
    Footprint::polygon(vec![Vec2::new(0.0, 0.0), Vec2::new(w, 0.0), Vec2::new(0.0, h)])
        .expect("valid triangle")
}

/// A 4x4 grid of cells holding obstacles and movables of the four basic
/// shapes. Three cells are empty; a fourth is freed only if the movable
/// straddling two cells steps into one of them.
fn confined() -> Result<Scene, BenchError> {
    let shapes = |k: usize| match k % 4 {
        0 => Footprint::circle(0.095),
        1 => Footprint::square(0.18),
        2 => Footprint::rectangle(0.22, 0.14),
        _ => triangle(0.22, 0.22),
    };
    let center = |cell: usize| Vec2::new(0.125 + 0.25 * (cell % 4) as f64, 0.125 + 0.25 * (cell / 4) as f64);
    // Triangles are centred on their bounding box rather than their centroid.
    let seat = |k: usize, cell: usize| {
        let shift = if k % 4 == 3 { -0.22 / 6.0 } else { 0.0 };
        Pose::from_position(center(cell) + Vec2::new(shift, shift), 0.0)
    };
    let obstacles = [0, 2, 4, 7, 8, 10, 13, 14];
    let movables = [1, 9, 11];
    let mut b = SceneBuilder::new("confined");
    for (k, &cell) in obstacles.iter().enumerate() {
        b = b.obstacle(format!("o{k}"), shapes(k), seat(k, cell));
    }
    for (k, &cell) in movables.iter().enumerate() {
        b = b.movable(format!("m{k}"), shapes(k + 1), seat(k + 1, cell));
    }
    let straddle = (center(5) + center(6)) * 0.5;
    b = b.movable("m3", shapes(1), Pose::from_position(straddle, 0.0));
    for k in 0..4 {
        b = b.new_object(format!("n{k}"), shapes(k));
    }
    Ok(b.build(unit_square())?)
}

/// Square frame of outer side `outer` and wall thickness `wall`.
pub fn frame(outer: f64, wall: f64) -> Result<Footprint, GeometryError> {
    let h = outer / 2.0;
    let i = h - wall;
    let rect = |x0: f64, y0: f64, x1: f64, y1: f64| {
        Part::polygon(vec![
            Vec2::new(x0, y0),
            Vec2::new(x1, y0),
            Vec2::new(x1, y1),
            Vec2::new(x0, y1),
        ])
    };
    Footprint::new(vec![
        rect(-h, -h, h, -i)?,
        rect(-h, i, h, h)?,
        rect(-h, -i, -i, i)?,
        rect(i, -i, h, i)?,
    ])
}

/// Four square frames nearly tile the surface; the new box only fits inside
/// a frame's hole.
fn tight() -> Result<Scene, BenchError> {
    let ring = frame(0.49, 0.1)?;
    let mut b = SceneBuilder::new("tight");
    for (k, (x, y)) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)].into_iter().enumerate() {
        b = b.movable(format!("frame{k}"), ring.clone(), Pose::new(x, y, 0.0));
    }
    b = b.new_object("box", Footprint::square(0.24));
    Ok(b.build(unit_square())?)
}

/// A bar longer than the surface is wide, plus eleven bars of half that
/// width.
fn elongated() -> Result<Scene, BenchError> {
    let mut b = SceneBuilder::new("elongated");
    b = b.new_object("long", Footprint::rectangle(1.2, 0.08));
    let slender = Footprint::rectangle(0.5, 0.06);
    let seats = [
        (0.3, 0.08, 0.0),
        (0.7, 0.2, 0.0),
        (0.25, 0.35, 0.0),
        (0.8, 0.55, std::f64::consts::FRAC_PI_2),
        (0.45, 0.7, 0.0),
        (0.3, 0.92, 0.0),
    ];
    for (k, &(x, y, t)) in seats.iter().enumerate() {
        b = b.movable(format!("bar{k}"), slender.clone(), Pose::new(x, y, t));
    }
    for k in 0..5 {
        b = b.new_object(format!("slat{k}"), slender.clone());
    }
    Ok(b.build(unit_square())?)
}

/// L-trominoes whose total area equals the surface area.
fn lshape2d() -> Result<Scene, BenchError> {
    let cell = 0.5;
    let sq = |x: f64, y: f64| {
        Part::polygon(vec![
            Vec2::new(x, y),
            Vec2::new(x + cell, y),
            Vec2::new(x + cell, y + cell),
            Vec2::new(x, y + cell),
        ])
    };
    let l = Footprint::new(vec![sq(0.0, 0.0)?, sq(cell, 0.0)?, sq(0.0, cell)?])?;
    let mut b = SceneBuilder::new("lshape2d");
    for k in 0..2 {
        b = b.new_object(format!("l{k}"), l.clone());
    }
    Ok(b.build(Surface::rectangle(Vec2::ZERO, Vec2::new(3.0 * cell, 2.0 * cell)))?)
}

/// One trial's outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub scene: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub coverage: f64,
    pub success: bool,
    pub cpu_seconds: f64,
    pub objects_moved: usize,
    pub col_count: usize,
    pub move_count: usize,
    pub change_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scene: String,
    pub algorithm: Algorithm,
    pub coverage: f64,
    pub trials: usize,
    pub success_rate: f64,
    pub mean_cpu_seconds: f64,
    pub mean_objects_moved: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub rows: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
}

impl HarnessReport {
    pub fn rows_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn summary_for(&self, scene: &str, algorithm: Algorithm) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.scene == scene && s.algorithm == algorithm)
    }
}

/// Averages per (scene, algorithm), in first-appearance order. Unsuccessful
/// trials count towards `mean_objects_moved`.
pub fn summarize(rows: &[TrialRow]) -> Vec<SummaryRow> {
    let mut out: Vec<(SummaryRow, usize, f64, usize)> = Vec::new();
    for r in rows {
        let idx = match out
            .iter()
            .position(|(s, ..)| s.scene == r.scene && s.algorithm == r.algorithm)
        {
            Some(i) => i,
            None => {
                out.push((
                    SummaryRow {
                        scene: r.scene.clone(),
                        algorithm: r.algorithm,
                        coverage: r.coverage,
                        trials: 0,
                        success_rate: 0.0,
                        mean_cpu_seconds: 0.0,
                        mean_objects_moved: 0.0,
                    },
                    0,
                    0.0,
                    0,
                ));
                out.len() - 1
            }
        };
        let (s, wins, cpu, moved) = &mut out[idx];
        s.trials += 1;
        *wins += r.success as usize;
        *cpu += r.cpu_seconds;
        *moved += r.objects_moved;
    }
    out.into_iter()
        .map(|(mut s, wins, cpu, moved)| {
            let n = s.trials as f64;
            s.success_rate = wins as f64 / n;
            s.mean_cpu_seconds = cpu / n;
            s.mean_objects_moved = moved as f64 / n;
            s
        })
        .collect()
}

/// Runs every (scene, algorithm, trial) combination on `jobs` worker threads.
/// Rows come back ordered by scene, then algorithm, then trial.
pub fn run_harness(
    scenes: &[Scene],
    plan: &TrialPlan,
    params: &SearchParams,
    jobs: usize,
) -> Result<HarnessReport, BenchError> {
    plan.validate()?;
    params.validate()?;
    let mut tasks = Vec::new();
    for (si, _) in scenes.iter().enumerate() {
        for &algo in &plan.algorithms {
            for t in 0..plan.trials {
                tasks.push((si, algo, plan.seed.wrapping_add(t as u64)));
            }
        }
    }
    let run = |&(si, algo, seed): &(usize, Algorithm, u64)| -> Result<TrialRow, BenchError> {
        let scene = &scenes[si];
        let r = solve(algo, scene, params, &SearchBudget::new(plan.timeout, seed))?;
        Ok(TrialRow {
            scene: scene.meta.name.clone(),
            algorithm: algo,
            seed,
            coverage: scene.coverage(),
            success: r.success,
            cpu_seconds: r.elapsed,
            objects_moved: count_moves(scene, &r.config)?,
            col_count: r.cost_r.col_count,
            move_count: r.cost_r.move_count,
            change_sum: r.cost_r.change_sum,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BenchError::BadSpec(e.to_string()))?;
    let rows = pool.install(|| tasks.par_iter().map(run).collect::<Result<Vec<_>, _>>())?;
    let summary = summarize(&rows);
    Ok(HarnessReport { rows, summary })
}

/// The experiment's scenes, generated from the plan's seed.
pub fn experiment_scenes(spec: &ExperimentSpec) -> Result<Vec<Scene>, BenchError> {
    gen_experiment(spec, &mut ChaCha8Rng::seed_from_u64(spec.plan.seed))
}

/// Generates the experiment's scenes from the plan's seed and runs the harness.
pub fn run_experiment(
    spec: &ExperimentSpec,
    params: &SearchParams,
    jobs: usize,
) -> Result<(Vec<Scene>, HarnessReport), BenchError> {
    let scenes = experiment_scenes(spec)?;
    let report = run_harness(&scenes, &spec.plan, params, jobs)?;
    Ok((scenes, report))
}
