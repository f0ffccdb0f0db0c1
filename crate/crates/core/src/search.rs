//! Grid-guided re-placement (intermediate search), placement-ball relaxation
//! (outermost search) and the two sampling baselines.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Pose, Vec2};
use crate::relax::{innermost_search, RelaxError, RelaxParams, RelaxReport};
use crate::scene::{
    cost_c, cost_r, is_solution, project_constraints, random_angle, random_place_new,
    Configuration, CostC, CostR, ObjectKind, PlacementBalls, Scene, SceneError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("no free grid cell up to {0}x{0}")]
    NoFreeCell(usize),
    #[error("search parameter `{0}` out of range")]
    BadParam(&'static str),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
}

/// Occupancy grid over the surface's bounding box.
#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    pub rows: usize,
    pub cols: usize,
    origin: Vec2,
    cell: Vec2,
    occupied: Vec<bool>,
    free: Vec<usize>,
}

impl GridState {
    fn build(scene: &Scene, centroids: &[Vec2], res: usize) -> GridState {
        let (lo, hi) = scene.surface.bounds();
        let cell = Vec2::new((hi.x - lo.x) / res as f64, (hi.y - lo.y) / res as f64);
        let mut grid = GridState {
            rows: res,
            cols: res,
            origin: lo,
            cell,
            occupied: vec![false; res * res],
            free: Vec::new(),
        };
        for &c in centroids {
            if let Some(idx) = grid.cell_of(c) {
                grid.occupied[idx] = true;
            }
        }
        grid.free = (0..res * res)
            .filter(|&i| !grid.occupied[i] && scene.surface.contains(grid.cell_center(i)))
            .collect();
        grid
    }

    /// Cell holding `p`; points on a gridline go to the lower index.
    pub fn cell_of(&self, p: Vec2) -> Option<usize> {
        let axis = |v: f64, o: f64, w: f64, n: usize| -> Option<usize> {
            let t = (v - o) / w;
            if !(-1e-12..=n as f64 + 1e-12).contains(&t) {
                return None;
            }
            Some((t.ceil() as isize - 1).clamp(0, n as isize - 1) as usize)
        };
        let col = axis(p.x, self.origin.x, self.cell.x, self.cols)?;
        let row = axis(p.y, self.origin.y, self.cell.y, self.rows)?;
        Some(row * self.cols + col)
    }

    pub fn cell_center(&self, idx: usize) -> Vec2 {
        let (row, col) = (idx / self.cols, idx % self.cols);
        Vec2::new(
            self.origin.x + (col as f64 + 0.5) * self.cell.x,
            self.origin.y + (row as f64 + 0.5) * self.cell.y,
        )
    }

    pub fn is_occupied(&self, idx: usize) -> bool {
        self.occupied[idx]
    }

    /// Free cell indices, ascending (row-major).
    pub fn free_cells(&self) -> &[usize] {
        &self.free
    }
}

/// Imposes a `start_resolution` grid and doubles it until some cell is free.
pub fn free_cells(
    scene: &Scene,
    config: &Configuration,
    start_resolution: usize,
    cap: usize,
) -> Result<GridState, SearchError> {
    if start_resolution == 0 || cap < start_resolution {
        return Err(SearchError::BadParam("grid resolution"));
    }
    let centroids: Vec<Vec2> = config.poses().iter().flatten().map(|p| p.position()).collect();
    let mut res = start_resolution;
    loop {
        let grid = GridState::build(scene, &centroids, res);
        if !grid.free.is_empty() {
            return Ok(grid);
        }
        if res >= cap {
            return Err(SearchError::NoFreeCell(cap));
        }
        res = (res * 2).min(cap);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchParams {
    pub relax: RelaxParams,
    pub grid_start: usize,
    pub grid_cap: usize,
    /// Normalized ball growth per outer round.
    pub radius_step: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            relax: RelaxParams::default(),
            grid_start: 2,
            grid_cap: 256,
            radius_step: 0.1,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        self.relax.validate()?;
        if self.grid_start == 0 || self.grid_cap < self.grid_start {
            return Err(SearchError::BadParam("grid"));
        }
        if !(self.radius_step > 0.0 && self.radius_step <= 1.0) {
            return Err(SearchError::BadParam("radius_step"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBudget {
    /// Wall-clock seconds; may be infinite.
    pub timeout: f64,
    pub seed: u64,
}

impl SearchBudget {
    pub fn new(timeout: f64, seed: u64) -> Self {
        SearchBudget { timeout, seed }
    }

    fn validate(&self) -> Result<(), SearchError> {
        if self.timeout > 0.0 {
            Ok(())
        } else {
            Err(SearchError::BadParam("timeout"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Intermediate,
    Outer,
}

/// A configuration adopted as the incumbent of one search call.
#[derive(Clone, Debug, PartialEq)]
pub struct Adoption {
    pub level: Level,
    /// Sequence number of the search call that adopted it.
    pub call: usize,
    pub config: Configuration,
    /// Constraints in force when the configuration was produced.
    pub balls: PlacementBalls,
    pub cost_c: CostC,
    pub cost_r: CostR,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub config: Configuration,
    pub success: bool,
    pub cost_c: CostC,
    pub cost_r: CostR,
    pub elapsed: f64,
    pub inner_calls: usize,
    pub intermediate_calls: usize,
    pub timed_out: bool,
    pub trace: Vec<Adoption>,
}

impl SearchResult {
    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &SearchResult) -> bool {
        SearchResult {
            elapsed: 0.0,
            ..self.clone()
        } == SearchResult {
            elapsed: 0.0,
            ..other.clone()
        }
    }
}

struct Ctx<'a> {
    scene: &'a Scene,
    params: &'a SearchParams,
    start: Instant,
    deadline: Option<Instant>,
    rng: ChaCha8Rng,
    inner_calls: usize,
    intermediate_calls: usize,
    calls: usize,
    timed_out: bool,
    trace: Vec<Adoption>,
}

impl<'a> Ctx<'a> {
    fn new(
        scene: &'a Scene,
        params: &'a SearchParams,
        budget: &SearchBudget,
    ) -> Result<Self, SearchError> {
        params.validate()?;
        budget.validate()?;
        let start = Instant::now();
        let deadline = Duration::try_from_secs_f64(budget.timeout)
            .ok()
            .and_then(|d| start.checked_add(d));
        Ok(Ctx {
            scene,
            params,
            start,
            deadline,
            rng: ChaCha8Rng::seed_from_u64(budget.seed),
            inner_calls: 0,
            intermediate_calls: 0,
            calls: 0,
            timed_out: false,
            trace: Vec::new(),
        })
    }

    fn expired(&mut self) -> bool {
        if !self.timed_out {
            if let Some(d) = self.deadline {
                self.timed_out = Instant::now() >= d;
            }
        }
        self.timed_out
    }

    fn relax(
        &mut self,
        balls: &PlacementBalls,
        config: &Configuration,
    ) -> Result<RelaxReport, SearchError> {
        self.inner_calls += 1;
        Ok(innermost_search(
            self.scene,
            balls,
            config,
            &self.params.relax,
            &mut self.rng,
        )?)
    }

    fn adopt(
        &mut self,
        level: Level,
        call: usize,
        config: &Configuration,
        balls: &PlacementBalls,
    ) -> Result<(), SearchError> {
        self.trace.push(Adoption {
            level,
            call,
            config: config.clone(),
            balls: balls.clone(),
            cost_c: cost_c(self.scene, config)?,
            cost_r: cost_r(self.scene, config)?,
        });
        Ok(())
    }

    fn finish(self, config: Configuration) -> Result<SearchResult, SearchError> {
        Ok(SearchResult {
            success: is_solution(self.scene, &config)?,
            cost_c: cost_c(self.scene, &config)?,
            cost_r: cost_r(self.scene, &config)?,
            config,
            elapsed: self.start.elapsed().as_secs_f64(),
            inner_calls: self.inner_calls,
            intermediate_calls: self.intermediate_calls,
            timed_out: self.timed_out,
            trace: self.trace,
        })
    }

    /// The intermediate loop proper; returns the final incumbent.
    fn intermediate(
        &mut self,
        balls: &PlacementBalls,
        start: Configuration,
    ) -> Result<Configuration, SearchError> {
        let scene = self.scene;
        self.intermediate_calls += 1;
        self.calls += 1;
        let call = self.calls;
        let mut current = start;
        let mut current_cost = cost_c(scene, &current)?;
        self.adopt(Level::Intermediate, call, &current, balls)?;
        if current_cost.col_count == 0 || self.expired() {
            return Ok(current);
        }

        let first = self.relax(balls, &current)?;
        if first.cost_c_after.precedes(&current_cost) {
            current = first.config;
            current_cost = first.cost_c_after;
            self.adopt(Level::Intermediate, call, &current, balls)?;
        }

        while current_cost.col_count > 0 && !self.expired() {
            let grid = match free_cells(scene, &current, self.params.grid_start, self.params.grid_cap) {
                Ok(g) => g,
                Err(SearchError::NoFreeCell(_)) => break,
                Err(e) => return Err(e),
            };
            let movers: Vec<usize> = scene
                .contacts(&current)?
                .colliding_objects(scene.len())
                .into_iter()
                .filter(|&i| match scene.kind(i) {
                    ObjectKind::Obstacle => false,
                    ObjectKind::Movable => !balls.is_frozen(i),
                    ObjectKind::New => true,
                })
                .collect();

            let mut best: Option<RelaxReport> = None;
            'scan: for &o in &movers {
                for &cell in grid.free_cells() {
                    if self.expired() {
                        break 'scan;
                    }
                    let pose = Pose::from_position(grid.cell_center(cell), random_angle(&mut self.rng));
                    let mut candidate = current.clone();
                    candidate.set(o, project_constraints(scene, balls, o, pose));
                    let report = self.relax(balls, &candidate)?;
                    let better = best
                        .as_ref()
                        .map_or(true, |b| report.cost_c_after.precedes(&b.cost_c_after));
                    if better {
                        let solved = report.cost_c_after.col_count == 0;
                        best = Some(report);
                        if solved {
                            break 'scan;
                        }
                    }
                }
            }

            match best {
                Some(b) if b.cost_c_after.precedes(&current_cost) => {
                    current = b.config;
                    current_cost = b.cost_c_after;
                    self.adopt(Level::Intermediate, call, &current, balls)?;
                }
                _ => break,
            }
        }
        Ok(current)
    }
}

/// Index of the first lexicographically smallest child.
pub fn best_child(children: &[CostR]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in children.iter().enumerate() {
        if best.map_or(true, |b| c.precedes(&children[b])) {
            best = Some(i);
        }
    }
    best
}

/// Grid-guided re-placement search minimizing `⟨#col, cost_p⟩`.
///
/// Starts from `config` or, if absent, from a random placement of the new
/// objects.
pub fn intermediate_search(
    scene: &Scene,
    balls: &PlacementBalls,
    config: Option<&Configuration>,
    params: &SearchParams,
    budget: &SearchBudget,
) -> Result<SearchResult, SearchError> {
    let mut ctx = Ctx::new(scene, params, budget)?;
    let start = match config {
        Some(c) => {
            scene.require_complete(c)?;
            c.clone()
        }
        None => random_place_new(scene, &mut ctx.rng)?,
    };
    let out = ctx.intermediate(balls, start)?;
    ctx.finish(out)
}

/// Placement-ball relaxation minimizing `⟨#col, #move, cost_d⟩`.
pub fn outermost_search(
    scene: &Scene,
    params: &SearchParams,
    budget: &SearchBudget,
) -> Result<SearchResult, SearchError> {
    let mut ctx = Ctx::new(scene, params, budget)?;
    ctx.calls += 1;
    let call = ctx.calls;
    let mut balls = PlacementBalls::frozen(scene);
    let mut current = random_place_new(scene, &mut ctx.rng)?;
    let mut current_cost = cost_r(scene, &current)?;
    ctx.adopt(Level::Outer, call, &current, &balls)?;

    let child = ctx.intermediate(&balls, current.clone())?;
    let child_cost = cost_r(scene, &child)?;
    if child_cost.precedes(&current_cost) {
        current = child;
        current_cost = child_cost;
        ctx.adopt(Level::Outer, call, &current, &balls)?;
    }

    let movables: Vec<usize> = scene.indices_of(ObjectKind::Movable).collect();
    while current_cost.col_count > 0 && !ctx.expired() {
        let mut children = Vec::new();
        for &o in &movables {
            let r = balls.radius(o).expect("movable");
            if r >= 1.0 {
                continue;
            }
            if ctx.expired() {
                break;
            }
            let mut v = balls.clone();
            v.set(scene, o, r + params.radius_step)?;
            let c = ctx.intermediate(&v, current.clone())?;
            let cost = cost_r(scene, &c)?;
            children.push((c, cost, v));
        }
        let costs: Vec<CostR> = children.iter().map(|c| c.1).collect();
        match best_child(&costs) {
            Some(b) if costs[b].precedes(&current_cost) => {
                let (c, cost, v) = children.swap_remove(b);
                current = c;
                current_cost = cost;
                balls = v;
                ctx.adopt(Level::Outer, call, &current, &balls)?;
            }
            _ => break,
        }
    }
    ctx.finish(current)
}

/// Random placement followed by a single relaxation with free balls.
pub fn inner_search(
    scene: &Scene,
    params: &SearchParams,
    budget: &SearchBudget,
) -> Result<SearchResult, SearchError> {
    let mut ctx = Ctx::new(scene, params, budget)?;
    let start = random_place_new(scene, &mut ctx.rng)?;
    let report = ctx.relax(&PlacementBalls::free(scene), &start)?;
    ctx.finish(report.config)
}

/// Uniform random placements of the new objects until one is a solution.
pub fn random_sample(scene: &Scene, budget: &SearchBudget) -> Result<SearchResult, SearchError> {
    let params = SearchParams::default();
    let mut ctx = Ctx::new(scene, &params, budget)?;
    let mut last = random_place_new(scene, &mut ctx.rng)?;
    while !is_solution(scene, &last)? && !ctx.expired() {
        last = random_place_new(scene, &mut ctx.rng)?;
    }
    ctx.finish(last)
}

/// Repeated random placement plus relaxation; keeps the best result.
pub fn random_restart(
    scene: &Scene,
    params: &SearchParams,
    budget: &SearchBudget,
) -> Result<SearchResult, SearchError> {
    let mut ctx = Ctx::new(scene, params, budget)?;
    let balls = PlacementBalls::free(scene);
    let mut best: Option<RelaxReport> = None;
    loop {
        let start = random_place_new(scene, &mut ctx.rng)?;
        let report = ctx.relax(&balls, &start)?;
        let better = best
            .as_ref()
            .map_or(true, |b| report.cost_c_after.precedes(&b.cost_c_after));
        if better {
            best = Some(report);
        }
        let done = best.as_ref().is_some_and(|b| b.cost_c_after.col_count == 0);
        if done || ctx.expired() {
            break;
        }
    }
    ctx.finish(best.expect("at least one restart").config)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Inner,
    Intermediate,
    Outer,
    RandomSample,
    RandomRestart,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Inner,
        Algorithm::Intermediate,
        Algorithm::Outer,
        Algorithm::RandomSample,
        Algorithm::RandomRestart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Inner => "inner",
            Algorithm::Intermediate => "intermediate",
            Algorithm::Outer => "outer",
            Algorithm::RandomSample => "random-sample",
            Algorithm::RandomRestart => "random-restart",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// Runs `algo` from scratch. Intermediate uses free balls.
pub fn solve(
    algo: Algorithm,
    scene: &Scene,
    params: &SearchParams,
    budget: &SearchBudget,
) -> Result<SearchResult, SearchError> {
    match algo {
        Algorithm::Inner => inner_search(scene, params, budget),
        Algorithm::Intermediate => {
            intermediate_search(scene, &PlacementBalls::free(scene), None, params, budget)
        }
        Algorithm::Outer => outermost_search(scene, params, budget),
        Algorithm::RandomSample => random_sample(scene, budget),
        Algorithm::RandomRestart => random_restart(scene, params, budget),
    }
}
