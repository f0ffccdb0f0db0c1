//! Acceptance checks. Each test prints one `criterion N: PASS|FAIL` line to
//! stderr, uncaptured, then asserts.

mod common;

use std::io::Write;
use std::time::Instant;

use common::*;
use placer_core::bench::{
    experiment_scenes, gen_benchmark, gen_experiment, run_harness, ExperimentSpec, HarnessReport,
    TrialPlan, Variant, BENCHMARKS,
};
use placer_core::geometry::{penetration, Footprint, Pose, Surface, Vec2, CONTACT_TOL};
use placer_core::relax::{innermost_search, RelaxParams};
use placer_core::scene::{
    ball_satisfied, cost_d, is_solution, lex_less, CostC, CostR, ObjectKind,
    PlacementBalls, SceneBuilder,
};
use placer_core::search::{solve, Algorithm, Level, SearchBudget, SearchParams, SearchResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn report(n: u32, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {verdict} ({detail})");
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[test]
fn criterion_1_geometry_oracles() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();

    for k in 0..1000 {
        let (r1, r2) = (rng.gen_range(0.05..2.0), rng.gen_range(0.05..2.0));
        let pa = random_pose(&mut rng, 2.5);
        let pb = random_pose(&mut rng, 2.5);
        let (a, b) = (Footprint::circle(r1), Footprint::circle(r2));
        let p = penetration(&a, &pa, &b, &pb);
        let want = circle_depth(r1, r2, (pa.position() - pb.position()).norm());
        if (p.depth - want).abs() > 1e-9 {
            failures.push(format!("circle {k}: {} vs {want}", p.depth));
        }
        let moved = pa.with_position(pa.position() + p.direction * p.depth);
        if penetration(&a, &moved, &b, &pb).depth > CONTACT_TOL {
            failures.push(format!("circle {k}: resolution leaves overlap"));
        }
    }

    let mut overlapping = 0;
    for k in 0..200 {
        let a = polygon_footprint(random_convex(&mut rng, 8));
        let b = polygon_footprint(random_convex(&mut rng, 8));
        let pa = random_pose(&mut rng, 1.0);
        let pb = random_pose(&mut rng, 1.0);
        let p = penetration(&a, &pa, &b, &pb);
        let want = sampled_depth(&world_vertices(&a.place(&pa)), &world_vertices(&b.place(&pb)));
        overlapping += (want > 0.0) as usize;
        if (p.depth - want).abs() > 1e-4 {
            failures.push(format!("polygon {k}: {} vs {want}", p.depth));
        }
        let moved = pa.with_position(pa.position() + p.direction * p.depth);
        if penetration(&a, &moved, &b, &pb).depth > CONTACT_TOL {
            failures.push(format!("polygon {k}: resolution leaves overlap"));
        }
    }

    let secs = t.elapsed().as_secs_f64();
    let ok = failures.is_empty() && secs < 10.0;
    report(
        1,
        ok,
        &format!(
            "1000 circle pairs, 200 polygon pairs ({overlapping} overlapping), {} mismatches, {secs:.2}s",
            failures.len()
        ),
    );
    assert!(ok, "{failures:?}, {secs}s");
}

#[test]
fn criterion_2_costs_and_comparator() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // Components on a coarse grid so the comparison tolerance never merges
    // distinct values.
    let tuples: Vec<[f64; 3]> = (0..10_000)
        .map(|_| [0; 3].map(|_: i32| rng.gen_range(0..4) as f64 * 0.5))
        .collect();
    let pick = |rng: &mut ChaCha8Rng| tuples[rng.gen_range(0..tuples.len())];
    let equiv = |a: &[f64; 3], b: &[f64; 3]| !lex_less(a, b) && !lex_less(b, a);
    let mut bad = 0;
    for t in &tuples {
        bad += lex_less(t, t) as usize;
    }
    for _ in 0..10_000 {
        let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        bad += (lex_less(&a, &b) && lex_less(&b, &a)) as usize;
        bad += (lex_less(&a, &b) && lex_less(&b, &c) && !lex_less(&a, &c)) as usize;
        bad += (equiv(&a, &b) && equiv(&b, &c) && !equiv(&a, &c)) as usize;
    }

    let c_pair = CostC { col_count: 19, pen_sum: 1.43 }.precedes(&CostC { col_count: 20, pen_sum: 1.37 });
    let r_pair = CostR { col_count: 0, move_count: 1, change_sum: 1.76 }
        .precedes(&CostR { col_count: 2, move_count: 1, change_sum: 2.82 });

    let s = SceneBuilder::new("d")
        .movable("a", Footprint::square(2.0 * 2f64.sqrt()), Pose::new(0.0, 0.0, 0.0))
        .movable("b", Footprint::circle(1.0), Pose::new(8.0, 0.0, 0.0))
        .build(Surface::rectangle(Vec2::new(-20.0, -20.0), Vec2::new(20.0, 20.0)))
        .unwrap();
    let with = |i: usize, p: Pose| {
        let mut c = s.initial().clone();
        c.set(i, p);
        c
    };
    let translation = cost_d(&s, &with(0, Pose::new(3.0, 4.0, 0.0))).unwrap();
    let rotation = cost_d(&s, &with(0, Pose::new(0.0, 0.0, PI))).unwrap();
    let mut both = with(0, Pose::new(3.0, 4.0, PI));
    both.set(1, Pose::new(8.0, 2.0, 0.0));
    let additive = cost_d(&s, &both).unwrap();

    let ok = bad == 0
        && c_pair
        && r_pair
        && (translation - 5.0).abs() < 1e-12
        && (rotation - 2.0 * PI).abs() < 1e-9
        && (additive - (5.0 + 2.0 * PI + 2.0)).abs() < 1e-9;
    report(
        2,
        ok,
        &format!(
            "{bad} order violations; reported pairs {c_pair}/{r_pair}; translation {translation:.12}, rotation {rotation:.12}, sum {additive:.12}"
        ),
    );
    assert!(ok);
}

fn check_trace(scene: &placer_core::scene::Scene, r: &SearchResult) -> Result<(), String> {
    let obstacles: Vec<usize> = scene.indices_of(ObjectKind::Obstacle).collect();
    for w in r.trace.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.level != b.level || a.call != b.call {
            continue;
        }
        let descends = match b.level {
            Level::Intermediate => b.cost_c.precedes(&a.cost_c),
            Level::Outer => b.cost_r.precedes(&a.cost_r),
        };
        if !descends {
            return Err(format!("call {} adopted a non-improving configuration", b.call));
        }
    }
    for a in &r.trace {
        if !ball_satisfied(scene, &a.balls, &a.config) {
            return Err(format!("call {} broke its placement balls", a.call));
        }
        if obstacles.iter().any(|&i| a.config.get(i) != scene.initial().get(i)) {
            return Err("an obstacle moved".into());
        }
    }
    if r.success != is_solution(scene, &r.config).map_err(|e| e.to_string())? {
        return Err("success flag disagrees with the solution test".into());
    }
    Ok(())
}

#[test]
fn criterion_3_search_invariants() {
    let coverages = [0.3, 0.4, 0.5, 0.6, 0.7];
    let mut scenes = Vec::new();
    for seed in 0..10u64 {
        let variant = Variant::ALL[seed as usize % 3];
        let spec = ExperimentSpec {
            variant,
            coverage_targets: coverages.to_vec(),
            plan: TrialPlan { algorithms: vec![Algorithm::Outer], trials: 1, timeout: 1.0, seed },
        };
        scenes.extend(gen_experiment(&spec, &mut ChaCha8Rng::seed_from_u64(100 + seed)).unwrap());
    }
    let params = SearchParams::default();
    let mut problems = Vec::new();
    let (mut compared, mut adoptions) = (0, 0);
    for (k, scene) in scenes.iter().enumerate() {
        let algo = if k % 2 == 0 { Algorithm::Outer } else { Algorithm::Intermediate };
        let budget = SearchBudget::new(30.0, k as u64);
        let first = solve(algo, scene, &params, &budget).unwrap();
        adoptions += first.trace.len();
        if let Err(e) = check_trace(scene, &first) {
            problems.push(format!("{} {algo}: {e}", scene.meta.name));
        }
        let second = solve(algo, scene, &params, &budget).unwrap();
        if !first.timed_out && !second.timed_out {
            compared += 1;
            if !first.same_outcome(&second) {
                problems.push(format!("{} {algo}: not deterministic", scene.meta.name));
            }
        }
    }
    let ok = problems.is_empty() && scenes.len() == 50;
    report(
        3,
        ok,
        &format!(
            "{} scenes, {adoptions} adoptions checked, {compared} determinism pairs, {} problems",
            scenes.len(),
            problems.len()
        ),
    );
    assert!(ok, "{problems:?}");
}

const COVERAGE: [f64; 4] = [0.3, 0.5, 0.7, 0.85];
const TOLERANCE: f64 = 0.15;

struct Level4<'a> {
    coverage: f64,
    report: &'a HarnessReport,
    scene: String,
}

impl Level4<'_> {
    fn rows(&self, algo: Algorithm) -> impl Iterator<Item = &placer_core::bench::TrialRow> {
        self.report.rows.iter().filter(move |r| r.scene == self.scene && r.algorithm == algo)
    }
    fn success(&self, algo: Algorithm) -> f64 {
        self.report.summary_for(&self.scene, algo).unwrap().success_rate
    }
    fn moved(&self, algo: Algorithm) -> f64 {
        self.report.summary_for(&self.scene, algo).unwrap().mean_objects_moved
    }
}

#[test]
#[ignore = "320 trials of up to 60 s; run with --ignored"]
fn criterion_4_trends() {
    let t = Instant::now();
    let spec = ExperimentSpec {
        variant: Variant::NewObjects,
        coverage_targets: COVERAGE.to_vec(),
        plan: TrialPlan {
            algorithms: vec![
                Algorithm::Outer,
                Algorithm::Intermediate,
                Algorithm::Inner,
                Algorithm::RandomSample,
            ],
            trials: 20,
            timeout: 60.0,
            seed: 0,
        },
    };
    let scenes = experiment_scenes(&spec).unwrap();
    let harness = run_harness(&scenes, &spec.plan, &SearchParams::default(), jobs()).unwrap();
    let secs = t.elapsed().as_secs_f64();

    let mut fails = Vec::new();
    let mut lines = Vec::new();
    for (scene, &coverage) in scenes.iter().zip(&COVERAGE) {
        let l = Level4 { coverage, report: &harness, scene: scene.meta.name.clone() };
        use Algorithm::*;
        lines.push(format!(
            "c={:.2}: success out/mid/in/rs {:.2}/{:.2}/{:.2}/{:.2}, moved out/mid {:.2}/{:.2}",
            l.coverage,
            l.success(Outer),
            l.success(Intermediate),
            l.success(Inner),
            l.success(RandomSample),
            l.moved(Outer),
            l.moved(Intermediate)
        ));
        if l.moved(Outer) > l.moved(Intermediate) {
            fails.push(format!("(a) Outer moves more than Intermediate at {coverage}"));
        }
        if coverage <= 0.3 {
            let n = l.rows(Outer).count() as f64;
            let none = l.rows(Outer).filter(|r| r.objects_moved == 0).count() as f64;
            if none / n < 0.8 - TOLERANCE {
                fails.push(format!("(a) Outer moved nothing in only {:.2} of trials at {coverage}", none / n));
            }
        }
        if l.success(Intermediate) < l.success(Inner) {
            fails.push(format!("(b) Inner beats Intermediate at {coverage}"));
        }
        if l.success(Intermediate) < 0.9 - TOLERANCE {
            fails.push(format!("(b) Intermediate success {:.2} at {coverage}", l.success(Intermediate)));
        }
        if coverage >= 0.5 && l.success(RandomSample) > TOLERANCE {
            fails.push(format!("(c) Random Sample success {:.2} at {coverage}", l.success(RandomSample)));
        }
        if (0.5..=0.7).contains(&coverage) && l.success(Inner) <= 0.0 {
            fails.push(format!("(c) Inner never succeeds at {coverage}"));
        }
    }
    if secs > 1800.0 {
        fails.push(format!("runtime {secs:.0}s over 30 min"));
    }
    let ok = fails.is_empty();
    report(4, ok, &format!("{}; {secs:.0}s; {}", lines.join("; "), fails.join("; ")));
    assert!(ok, "{fails:?}");
}

#[test]
fn criterion_5_benchmarks() {
    let params = SearchParams::default();
    let mut fails = Vec::new();
    let mut lines = Vec::new();
    for name in BENCHMARKS {
        let scene = gen_benchmark(name).unwrap();
        let full = name == "confined";
        let mut best = [None::<usize>; 2];
        let mut solved = 0;
        'seeds: for seed in 0..10u64 {
            for (k, algo) in [Algorithm::Outer, Algorithm::Intermediate].into_iter().enumerate() {
                let r = solve(algo, &scene, &params, &SearchBudget::new(120.0, seed)).unwrap();
                if r.success {
                    solved += 1;
                    best[k] = Some(best[k].map_or(r.cost_r.move_count, |b: usize| b.min(r.cost_r.move_count)));
                    if !full {
                        break 'seeds;
                    }
                }
            }
        }
        lines.push(format!("{name}: {solved} solved, fewest moves outer/mid {:?}/{:?}", best[0], best[1]));
        if solved == 0 {
            fails.push(format!("{name} unsolved"));
        }
        if full {
            match best {
                [Some(o), Some(i)] if o < i => {}
                _ => fails.push(format!("{name}: Outer does not move fewer movables")),
            }
        }
    }
    let ok = fails.is_empty();
    report(5, ok, &format!("{}; {}", lines.join("; "), fails.join("; ")));
    assert!(ok, "{fails:?}");
}

#[test]
fn criterion_6_relaxation_contract() {
    let surface = Surface::rectangle(Vec2::new(-10.0, -10.0), Vec2::new(10.0, 10.0));
    let s = SceneBuilder::new("pair")
        .obstacle("o", Footprint::circle(1.0), Pose::new(0.0, 0.0, 0.0))
        .new_object("n", Footprint::circle(1.0))
        .build(surface)
        .unwrap();
    let params = RelaxParams::default();
    let balls = PlacementBalls::free(&s);
    let mut c = s.initial().clone();
    c.set(1, Pose::new(0.0, 0.0, 0.0));
    let mut worst: f64 = f64::INFINITY;
    let mut bad = 0;
    for seed in 0..100 {
        let r = innermost_search(&s, &balls, &c, &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let sep = r.config.get(1).unwrap().position().norm();
        worst = worst.min(sep);
        if !(sep >= 2.0 - 1e-3 && r.cost_p_after == 0.0 && r.iters_used <= 2000) {
            bad += 1;
        }
    }

    // Collision-free inputs: solved outputs of searches on a sparse scene.
    let scene = experiment_scenes(&ExperimentSpec {
        variant: Variant::NewObjects,
        coverage_targets: vec![0.3],
        plan: TrialPlan { algorithms: vec![Algorithm::Inner], trials: 1, timeout: 1.0, seed: 6 },
    })
    .unwrap()
    .remove(0);
    let free = PlacementBalls::free(&scene);
    let (mut unchanged, mut changed) = (0, 0);
    for seed in 0..20 {
        let solved = solve(Algorithm::Intermediate, &scene, &SearchParams::default(), &SearchBudget::new(30.0, seed)).unwrap();
        if !solved.success {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = innermost_search(&scene, &free, &solved.config, &params, &mut rng).unwrap();
        if r.config == solved.config && r.converged && r.cost_p_after == 0.0 {
            unchanged += 1;
        } else {
            changed += 1;
        }
    }

    let ok = bad == 0 && changed == 0 && unchanged > 0;
    report(
        6,
        ok,
        &format!("100 seeds, {bad} failures, min separation {worst:.6}; {unchanged} clear inputs unchanged, {changed} changed"),
    );
    assert!(ok);
}
