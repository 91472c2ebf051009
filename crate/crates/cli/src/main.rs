mod overrides;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use furrow_core::harness::{
    generated_paths, mean_var, random_obstacle_trial, simulate_closed_loop, smooth, smoothing_metrics, write_trace_csv,
    FieldStyle, SimOutput, TraceMode, TraceRow,
};
use furrow_core::tracker::g_eval;
use furrow_core::{PlanError, RunReport, Scenario, SimConfig, Smoother, Trajectory};

const RUN_REPORT_SCHEMA: &str = include_str!("../schema/run_report.schema.json");
const BENCH_REPORT_SCHEMA: &str = include_str!("../schema/bench_report.schema.json");
const SCENARIO_SCHEMA: &str = include_str!("../schema/scenario.schema.json");

#[derive(Parser)]
#[command(
    name = "furrow",
    version,
    about = "Reference smoothing and closed-loop tracking for field vehicles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smooth one reference path and write the trajectory.
    Smooth(RunArgs),
    /// Smooth and track one path, optionally with random hidden obstacles.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Hidden rectangles placed around the path in each trial.
        #[arg(long, default_value_t = 0)]
        obstacles: usize,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Every method on generated fields, aggregated per field style.
    Bench {
        /// Paths per field style.
        #[arg(long, default_value_t = 20)]
        paths: usize,
        /// First field seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Print a bundled JSON schema.
    Schema {
        #[arg(value_parser = ["report", "bench", "scenario"])]
        which: String,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    path_index: usize,
    #[arg(long, default_value = "hybrid")]
    method: Smoother,
    /// Replaces the scenario seed; trial t uses seed + t.
    #[arg(long)]
    seed: Option<u64>,
    /// Configuration override such as planner.beta=0.2 or mpc.horizon=15.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NoPlan(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::NoPlan(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Smooth(run) => cmd_smooth(&run),
        Command::Simulate {
            run,
            obstacles,
            trials,
            parallel,
        } => cmd_simulate(&run, obstacles, trials, parallel),
        Command::Bench {
            paths,
            seed,
            sets,
            output_dir,
            parallel,
        } => cmd_bench(paths, seed, &sets, &output_dir, parallel),
        Command::Schema { which } => {
            let text = match which.as_str() {
                "report" => RUN_REPORT_SCHEMA,
                "bench" => BENCH_REPORT_SCHEMA,
                _ => SCENARIO_SCHEMA,
            };
            print!("{text}");
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("furrow: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn load(run: &RunArgs) -> Result<(Scenario, SimConfig), CliError> {
    let mut scenario = Scenario::load(&run.scenario).map_err(|e| CliError::Input(e.to_string()))?;
    if run.path_index >= scenario.reference_paths.len() {
        return Err(CliError::Input(format!(
            "path index {} out of range ({} paths)",
            run.path_index,
            scenario.reference_paths.len()
        )));
    }
    if let Some(seed) = run.seed {
        scenario.rng_seed = seed;
    }
    let config = overrides::apply(&SimConfig::default(), &run.sets).map_err(CliError::Input)?;
    Ok((scenario, config))
}

fn output_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| internal(format!("{}: {e}", dir.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(internal)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| internal(format!("{}: {e}", path.display())))?;
    write_trace_csv(rows, std::io::BufWriter::new(file)).map_err(internal)
}

/// Planned states in trace layout: steering from curvature, no acceleration.
fn trajectory_rows(traj: &Trajectory, scenario: &Scenario) -> Vec<TraceRow> {
    traj.points
        .iter()
        .enumerate()
        .map(|(i, p)| TraceRow {
            t: i as f64 * traj.dt,
            x: p.state.x,
            y: p.state.y,
            theta: p.state.theta,
            v: p.direction.sign() * p.state.v.abs(),
            delta: (scenario.vehicle.wheelbase * p.curvature).atan(),
            a: 0.0,
            mode: TraceMode::Plan,
            g_min: g_eval(&p.state, &scenario.field, &scenario.obstacles, &scenario.vehicle),
        })
        .collect()
}

fn cmd_smooth(run: &RunArgs) -> Result<(), CliError> {
    let (scenario, config) = load(run)?;
    let traj = match smooth(&scenario, run.path_index, run.method, &scenario.obstacles, &config) {
        Ok(t) => t,
        Err(e @ PlanError::InvalidConfig(_)) => return Err(CliError::Input(e.to_string())),
        Err(e) => return Err(CliError::NoPlan(e.to_string())),
    };
    let r = &scenario.reference_paths[run.path_index];
    let (deviation, violation) = smoothing_metrics(r, run.method, &traj, &scenario.vehicle, &config);
    output_dir(&run.output_dir)?;
    write_trace(
        &run.output_dir.join("trajectory.csv"),
        &trajectory_rows(&traj, &scenario),
    )?;
    let metrics = json!({
        "path_index": run.path_index,
        "method": run.method,
        "deviation_degree": deviation,
        "curvature_violation_ratio": violation,
        "length": traj.length(),
        "states": traj.len(),
        "overrides": run.sets,
    });
    write_json(&run.output_dir.join("metrics.json"), &metrics)?;
    println!("{metrics}");
    Ok(())
}

/// A run report with the overrides it ran under.
#[derive(Serialize)]
struct ReportFile<'a> {
    overrides: &'a [String],
    #[serde(flatten)]
    report: &'a RunReport,
}

fn timing_json(out: &SimOutput) -> serde_json::Value {
    serde_json::to_value(&out.report.timing).expect("timing serializes")
}

fn write_run(dir: &Path, out: &SimOutput, sets: &[String]) -> Result<(), CliError> {
    output_dir(dir)?;
    write_trace(&dir.join("trace.csv"), &out.trace)?;
    write_json(
        &dir.join("report.json"),
        &ReportFile {
            overrides: sets,
            report: &out.report,
        },
    )?;
    write_json(&dir.join("timing.json"), &timing_json(out))
}

fn pool(parallel: usize) -> Result<rayon::ThreadPool, CliError> {
    if parallel == 0 {
        return Err(CliError::Input("--parallel must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(internal)
}

fn cmd_simulate(run: &RunArgs, obstacles: usize, trials: usize, parallel: usize) -> Result<(), CliError> {
    let (scenario, config) = load(run)?;
    if obstacles == 0 {
        if trials != 1 {
            return Err(CliError::Input("--trials needs --obstacles".into()));
        }
        let out = simulate_closed_loop(&scenario, run.path_index, run.method, &config).map_err(internal)?;
        write_run(&run.output_dir, &out, &run.sets)?;
        println!(
            "{}",
            json!({ "success": out.report.success, "failure_cause": out.report.failure_cause })
        );
        return Ok(());
    }
    if run.method != Smoother::HybridAStar {
        return Err(CliError::Input(
            "obstacle trials replan and need --method hybrid".into(),
        ));
    }
    if trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    let base = scenario.rng_seed;
    let runs: Vec<SimOutput> = pool(parallel)?
        .install(|| {
            (0..trials)
                .into_par_iter()
                .map(|t| random_obstacle_trial(&scenario, run.path_index, obstacles, base + t as u64, &config))
                .collect::<Result<_, _>>()
        })
        .map_err(|e| CliError::Input(e.to_string()))?;
    for (t, out) in runs.iter().enumerate() {
        write_run(&run.output_dir.join(format!("trial-{t:03}")), out, &run.sets)?;
    }
    let successes = runs.iter().filter(|o| o.report.success).count();
    let summary = json!({
        "path_index": run.path_index,
        "obstacles": obstacles,
        "trials": trials,
        "first_seed": base,
        "successes": successes,
        "success_ratio": successes as f64 / trials as f64,
        "replans": runs.iter().map(|o| o.report.replan_count()).sum::<usize>(),
        "failures": runs.iter().filter_map(|o| o.report.failure_cause).collect::<Vec<_>>(),
        "overrides": run.sets,
    });
    let replan: Vec<f64> = runs
        .iter()
        .flat_map(|o| o.report.timing.replan_times_s.iter().copied())
        .collect();
    let control: Vec<f64> = runs
        .iter()
        .flat_map(|o| o.report.timing.control_times_s.iter().copied())
        .collect();
    let (mc, vc) = mean_var(&control);
    let timing = json!({
        "mean_replan_time_s": mean_var(&replan).0,
        "mean_control_time_s": mc,
        "control_time_var_s": vc,
    });
    write_json(&run.output_dir.join("summary.json"), &summary)?;
    write_json(&run.output_dir.join("timing.json"), &timing)?;
    println!("{summary}");
    Ok(())
}

#[derive(Serialize)]
struct Spread {
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
    mean: f64,
}

fn spread(mut xs: Vec<f64>) -> Option<Spread> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (xs.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        xs[lo] + (pos - lo as f64) * (xs[hi] - xs[lo])
    };
    Some(Spread {
        min: xs[0],
        q1: at(0.25),
        median: at(0.5),
        q3: at(0.75),
        max: xs[xs.len() - 1],
        mean: mean_var(&xs).0,
    })
}

#[derive(Serialize)]
struct MethodRow {
    method: Smoother,
    paths: usize,
    no_plan: usize,
    success_ratio: f64,
    deviation_degree: Option<Spread>,
    tracked_deviation_degree: Option<Spread>,
    mean_violation_ratio: f64,
    max_violation_ratio: f64,
}

#[derive(Serialize)]
struct SceneRow {
    style: FieldStyle,
    /// Share of paths where hybrid deviates no more than the B-spline.
    hybrid_not_worse_than_bspline: f64,
    methods: Vec<MethodRow>,
}

const METHODS: [Smoother; 3] = [Smoother::HybridAStar, Smoother::BSpline, Smoother::Raw];

fn method_row(method: Smoother, reports: &[&RunReport]) -> MethodRow {
    let devs = reports.iter().filter_map(|r| r.deviation_degree).collect();
    let tracked = reports.iter().filter_map(|r| r.tracked_deviation_degree).collect();
    let viol: Vec<f64> = reports.iter().filter_map(|r| r.curvature_violation_ratio).collect();
    let n = reports.len();
    MethodRow {
        method,
        paths: n,
        no_plan: reports.iter().filter(|r| r.deviation_degree.is_none()).count(),
        success_ratio: reports.iter().filter(|r| r.success).count() as f64 / n.max(1) as f64,
        deviation_degree: spread(devs),
        tracked_deviation_degree: spread(tracked),
        mean_violation_ratio: mean_var(&viol).0,
        max_violation_ratio: viol.iter().copied().fold(0.0, f64::max),
    }
}

fn cmd_bench(paths: usize, seed: u64, sets: &[String], dir: &Path, parallel: usize) -> Result<(), CliError> {
    let config = overrides::apply(&SimConfig::default(), sets).map_err(CliError::Input)?;
    let jobs: Vec<(FieldStyle, Scenario, usize, Smoother)> = FieldStyle::ALL
        .iter()
        .flat_map(|&style| {
            generated_paths(style, paths, seed)
                .into_iter()
                .map(move |(s, i)| (style, s, i))
        })
        .flat_map(|(style, s, i)| METHODS.map(|m| (style, s.clone(), i, m)))
        .collect();
    let reports: Vec<RunReport> = pool(parallel)?
        .install(|| {
            jobs.par_iter()
                .map(|(_, s, i, m)| simulate_closed_loop(s, *i, *m, &config).map(|o| o.report))
                .collect::<Result<_, _>>()
        })
        .map_err(internal)?;

    output_dir(dir)?;
    let mut csv =
        String::from("style,field_seed,path_index,method,deviation_degree,violation_ratio,success,failure_cause\n");
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for ((style, s, _, _), r) in jobs.iter().zip(&reports) {
        let cause = r
            .failure_cause
            .map(|c| serde_json::to_value(c).expect("cause serializes"));
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            serde_json::to_value(style)
                .expect("style serializes")
                .as_str()
                .unwrap_or_default(),
            s.rng_seed,
            r.path_index,
            r.method.name(),
            opt(r.deviation_degree),
            opt(r.curvature_violation_ratio),
            r.success,
            cause.as_ref().and_then(|c| c.as_str()).unwrap_or_default(),
        ));
    }
    fs::write(dir.join("runs.csv"), csv).map_err(internal)?;

    let mut scenes = Vec::new();
    for style in FieldStyle::ALL {
        let of = |m: Smoother| -> Vec<&RunReport> {
            jobs.iter()
                .zip(&reports)
                .filter(|((st, _, _, jm), _)| *st == style && *jm == m)
                .map(|(_, r)| r)
                .collect()
        };
        let (hy, bs) = (of(Smoother::HybridAStar), of(Smoother::BSpline));
        let not_worse = hy
            .iter()
            .zip(&bs)
            .filter(|(h, b)| matches!((h.deviation_degree, b.deviation_degree), (Some(x), Some(y)) if x <= y))
            .count();
        scenes.push(SceneRow {
            style,
            hybrid_not_worse_than_bspline: not_worse as f64 / hy.len().max(1) as f64,
            methods: METHODS.iter().map(|&m| method_row(m, &of(m))).collect(),
        });
    }
    let report = json!({
        "first_seed": seed,
        "paths_per_style": paths,
        "overrides": sets,
        "scenes": scenes,
    });
    write_json(&dir.join("bench.json"), &report)?;
    for scene in &scenes {
        for m in &scene.methods {
            println!(
                "{:<12} {:<7} success {:>5.1}%  deviation median {:>6.3} m  violation {:>5.1}%",
                serde_json::to_value(scene.style)
                    .expect("style serializes")
                    .as_str()
                    .unwrap_or_default(),
                m.method.name(),
                100.0 * m.success_ratio,
                m.deviation_degree.as_ref().map_or(f64::NAN, |d| d.median),
                100.0 * m.mean_violation_ratio,
            );
        }
    }
    Ok(())
}
