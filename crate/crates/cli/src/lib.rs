//! Command-line front end: solve, generate, benchmark and render scenes.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand};

use placer_core::bench::{
    experiment_scenes, gen_benchmark, run_harness, BenchError, ExperimentSpec, TrialPlan,
    TrialRow, Variant,
};
use placer_core::format::{config_to_json, parse_config, parse_params, parse_scene, scene_to_json};
use placer_core::scene::{count_moves, Scene};
use placer_core::search::{solve, Algorithm, SearchBudget, SearchParams};

pub mod render;

pub use render::render_svg;

/// Exit status for a solved instance.
pub const EXIT_SOLVED: i32 = 0;
/// Exit status for bad input or any other error.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when the search returned a configuration that still collides.
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "placer", version, about = "Place new objects among clutter on a 2D surface")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve a scene file.
    Solve(SolveArgs),
    /// Write benchmark or experiment scenes.
    Gen(GenArgs),
    /// Run seeded trials and write per-trial metrics.
    Bench(BenchArgs),
    /// Draw a scene, optionally at a given configuration.
    Render(RenderArgs),
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value = "outer")]
    pub algo: Algorithm,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seconds.
    #[arg(long, default_value_t = 300.0)]
    pub timeout: f64,
    /// JSON file overriding search and relaxation parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out_config: Option<PathBuf>,
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
    #[arg(long)]
    pub out_metrics: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SceneSource {
    /// One of confined, tight, elongated, lshape2d.
    #[arg(long, conflicts_with = "variant")]
    pub benchmark: Option<String>,
    /// Experiment family: new_objects, initial_movables or obstacles.
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Coverage targets of an experiment, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7,0.85")]
    pub coverage: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub source: SceneSource,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SceneSource,
    /// Scene files to run instead of generated ones.
    #[arg(long, conflicts_with_all = ["benchmark", "variant"])]
    pub scene: Vec<PathBuf>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "inner,intermediate,outer,random-sample,random-restart"
    )]
    pub algo: Vec<Algorithm>,
    #[arg(long, default_value_t = 60)]
    pub trials: usize,
    /// Seconds per trial.
    #[arg(long, default_value_t = 300.0)]
    pub timeout: f64,
    /// Base seed; trial k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Per-trial CSV rows.
    #[arg(long)]
    pub out_metrics: Option<PathBuf>,
    /// Directory for scenes, rows.csv and summary.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Configuration to draw; defaults to the initial one.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_svg: PathBuf,
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_SOLVED,
                _ => EXIT_ERROR,
            };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => solve_command(a),
        Command::Gen(a) => gen_command(a).map(|_| EXIT_SOLVED),
        Command::Bench(a) => bench_command(a).map(|_| EXIT_SOLVED),
        Command::Render(a) => render_command(a).map(|_| EXIT_SOLVED),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(BenchError::UnknownBenchmark(_)) = e.downcast_ref::<BenchError>() {
                eprintln!();
                let _ = Cli::command().print_help();
            }
            EXIT_ERROR
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    parse_scene(&read(path)?).with_context(|| format!("in scene {}", path.display()))
}

fn load_params(path: Option<&PathBuf>) -> Result<SearchParams> {
    let Some(p) = path else {
        return Ok(SearchParams::default());
    };
    let params = parse_params(&read(p)?).with_context(|| format!("in params {}", p.display()))?;
    params.validate().with_context(|| format!("in params {}", p.display()))?;
    Ok(params)
}

fn rows_csv(rows: &[TrialRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn solve_command(args: &SolveArgs) -> Result<i32> {
    let scene = load_scene(&args.scene)?;
    let params = load_params(args.params.as_ref())?;
    if !(args.timeout > 0.0) {
        bail!("--timeout must be positive");
    }
    let result = solve(args.algo, &scene, &params, &SearchBudget::new(args.timeout, args.seed))?;
    if let Some(p) = &args.out_config {
        write(p, &config_to_json(&scene, &result.config))?;
    }
    if let Some(p) = &args.out_svg {
        write(p, &render_svg(&scene, &result.config))?;
    }
    let row = TrialRow {
        scene: scene.meta.name.clone(),
        algorithm: args.algo,
        seed: args.seed,
        coverage: scene.coverage(),
        success: result.success,
        cpu_seconds: result.elapsed,
        objects_moved: count_moves(&scene, &result.config)?,
        col_count: result.cost_r.col_count,
        move_count: result.cost_r.move_count,
        change_sum: result.cost_r.change_sum,
    };
    if let Some(p) = &args.out_metrics {
        write(p, &rows_csv(std::slice::from_ref(&row))?)?;
    }
    println!(
        "{} {}: success={} collisions={} moved={} change={:.6} time={:.3}s",
        row.scene, row.algorithm, row.success, row.col_count, row.move_count, row.change_sum, row.cpu_seconds
    );
    Ok(if result.success { EXIT_SOLVED } else { EXIT_PARTIAL })
}

fn scenes_for(source: &SceneSource, plan: &TrialPlan) -> Result<Vec<Scene>> {
    match (&source.benchmark, source.variant) {
        (Some(name), _) => Ok(vec![gen_benchmark(name)?]),
        (None, Some(variant)) => Ok(experiment_scenes(&ExperimentSpec {
            variant,
            coverage_targets: source.coverage.clone(),
            plan: plan.clone(),
        })?),
        (None, None) => bail!("one of --benchmark or --variant is required"),
    }
}

fn scene_file(dir: &Path, scene: &Scene) -> PathBuf {
    dir.join(format!("{}.json", scene.meta.name))
}

pub fn gen_command(args: &GenArgs) -> Result<Vec<PathBuf>> {
    let plan = TrialPlan {
        algorithms: vec![Algorithm::Outer],
        trials: 1,
        timeout: 1.0,
        seed: args.seed,
    };
    let mut written = Vec::new();
    for scene in scenes_for(&args.source, &plan)? {
        let path = scene_file(&args.out_dir, &scene);
        write(&path, &scene_to_json(&scene))?;
        println!("{}", path.display());
        written.push(path);
    }
    Ok(written)
}

pub fn bench_command(args: &BenchArgs) -> Result<()> {
    let plan = TrialPlan {
        algorithms: args.algo.clone(),
        trials: args.trials,
        timeout: args.timeout,
        seed: args.seed,
    };
    let scenes = if args.scene.is_empty() {
        scenes_for(&args.source, &plan)?
    } else {
        args.scene.iter().map(|p| load_scene(p)).collect::<Result<_>>()?
    };
    let params = load_params(args.params.as_ref())?;
    let report = run_harness(&scenes, &plan, &params, args.jobs)?;
    let csv = report.rows_csv()?;
    if let Some(p) = &args.out_metrics {
        write(p, &csv)?;
    }
    if let Some(dir) = &args.out_dir {
        for s in &scenes {
            write(&scene_file(dir, s), &scene_to_json(s))?;
        }
        write(&dir.join("rows.csv"), &csv)?;
        write(&dir.join("summary.json"), &report.summary_json())?;
    }
    println!("scene,algorithm,coverage,trials,success_rate,mean_cpu_seconds,mean_objects_moved");
    for s in &report.summary {
        println!(
            "{},{},{:.4},{},{:.3},{:.4},{:.3}",
            s.scene, s.algorithm, s.coverage, s.trials, s.success_rate, s.mean_cpu_seconds, s.mean_objects_moved
        );
    }
    Ok(())
}

pub fn render_command(args: &RenderArgs) -> Result<()> {
    let scene = load_scene(&args.scene)?;
    let config = match &args.config {
        Some(p) => parse_config(&scene, &read(p)?).with_context(|| format!("in config {}", p.display()))?,
        None => scene.initial().clone(),
    };
    write(&args.out_svg, &render_svg(&scene, &config))
}
