//! `waypoint`: solve waypoint sets, run benchmarks and landscape walks,
//! generate datasets, and launch the planning service.

mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use waypoint_tsp::bench::{self, ReportFormat, SuiteConfig};
use waypoint_tsp::data::{self, BoundingBox, FileFormat};
use waypoint_tsp::landscape::{self, GridPos, Landscape, WalkTrace};
use waypoint_tsp::solve::{self, SolveOptions};
use waypoint_tsp::{Budget, DistanceMatrix, Error};
use waypoint_tsp_service::ServiceConfig;

use svg::Series;

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const SEED_ENV: &str = "WAYPOINT_TSP_SEED";

#[derive(Parser)]
#[command(name = "waypoint", version, about = "Waypoint route planning over the travelling salesman problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a waypoint file with one method.
    Solve(SolveArgs),
    /// Benchmark methods over seeded synthetic datasets.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Walk an analytic landscape with hill climbing or annealing.
    Landscape(LandscapeArgs),
    /// Generate a seeded random waypoint set.
    Gen(GenArgs),
    /// Lay a rows x cols grid of waypoints over a box.
    Grid(GridArgs),
    /// Run the HTTP planning service.
    Serve(ServeArgs),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Run the suite and write report.{csv,json,md} plus per-run traces.
    Run(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Waypoint file (CSV with id,lat,lon or id,x,y; or GeoJSON).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    /// Method id or alias; an unknown name prints the full list.
    #[arg(long)]
    method: String,
    /// Route JSON to write.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Cost-time trace CSV to write.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget for anytime methods.
    #[arg(long)]
    budget_ms: Option<u64>,
    /// Iteration cap (episodes for RL methods).
    #[arg(long)]
    iters: Option<u64>,
    /// Index of the waypoint the route starts from.
    #[arg(long, default_value_t = 0)]
    start: usize,
    /// Method parameter as key=value; repeatable. Values parse as JSON, else as strings.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "nn,christofides,sa,tabu,gls,ql,dql")]
    methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "20,50,100")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = bench::DEFAULT_REPEATS)]
    repeats: u32,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2_000)]
    budget_ms: u64,
    /// Iteration cap per run; makes stochastic results independent of machine speed.
    #[arg(long)]
    iters: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Skip per-run trace CSVs and curve plots.
    #[arg(long)]
    no_traces: bool,
}

#[derive(Args)]
struct LandscapeArgs {
    /// single or multi.
    #[arg(long, default_value = "single")]
    kind: String,
    /// hc or sa.
    #[arg(long, default_value = "hc")]
    method: String,
    /// Start position x1,x2 on the 0.05 grid.
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    start: String,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long = "t0", default_value_t = 1.0)]
    t0: f64,
    #[arg(long, default_value_t = 0.99)]
    alpha: f64,
    #[arg(long, default_value_t = landscape::DEFAULT_MAX_ITERS)]
    max_iters: u64,
    /// Directory for the CSV trace and SVG plots.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BoxArgs {
    /// min_lat,max_lat,min_lon,max_lon (or min_x,max_x,min_y,max_y with --planar).
    /// Defaults to the built-in 11 km² site.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    bbox: Option<Vec<f64>>,
    #[arg(long)]
    planar: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    area: BoxArgs,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[command(flatten)]
    area: BoxArgs,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Simultaneous solves; more requests queue in arrival order.
    #[arg(long)]
    max_concurrent: Option<usize>,
    /// Extra origin allowed by CORS, or `*`.
    #[arg(long)]
    cors_origin: Option<String>,
    /// Directory with the UI bundle to serve at `/`.
    #[arg(long, value_name = "DIR")]
    static_dir: Option<PathBuf>,
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownMethod(_) | Error::InvalidParameter { .. } => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(BenchCommand::Run(a)) => cmd_bench(a),
        Command::Landscape(a) => cmd_landscape(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            if f.code == EXIT_USAGE {
                eprintln!("run with --help for usage");
            }
            ExitCode::from(f.code)
        }
    }
}

fn method_list() -> String {
    solve::methods()
        .iter()
        .map(|m| {
            if m.aliases.is_empty() {
                format!("  {}", m.id)
            } else {
                format!("  {} (aliases: {})", m.id, m.aliases.join(", "))
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn check_method(name: &str) -> Result<&'static str, Failure> {
    solve::lookup(name)
        .map(|m| m.id)
        .map_err(|_| Failure::usage(format!("unknown method {name:?}; valid methods:\n{}", method_list())))
}

fn parse_params(raw: &[String]) -> Result<Map<String, Value>, Failure> {
    let mut out = Map::new();
    for kv in raw {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--param expects KEY=VALUE, got {kv:?}")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}

fn file_format(explicit: Option<&str>, path: &Path) -> Result<FileFormat, Failure> {
    match explicit {
        Some(f) => f.parse().map_err(|e: Error| Failure::usage(e.to_string())),
        None => Ok(FileFormat::from_path(path)),
    }
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let method = check_method(&a.method)?;
    let params = parse_params(&a.params)?;
    let format = file_format(a.format.as_deref(), &a.input)?;
    let set = data::load_waypoints(&a.input, format).map_err(|e| Failure {
        message: format!("{}: {e}", a.input.display()),
        ..Failure::from(e)
    })?;
    if a.start >= set.len() {
        return Err(Failure::usage(format!("--start {} out of range for {} waypoints", a.start, set.len())));
    }
    let d = DistanceMatrix::build(&set, set.default_metric())?;
    let opts = SolveOptions {
        rng_seed: a.seed,
        start: a.start,
        budget: Budget {
            max_iters: a.iters,
            time_ms: a.budget_ms,
        },
        params,
    };
    let s = solve::solve(&d, method, &opts)?;
    if let Some(out) = &a.out {
        data::export_route(&s.tour, &set, out)?;
    }
    if let Some(path) = &a.trace {
        data::write_atomic(path, s.trace.to_csv().as_bytes())?;
    }
    println!(
        "method={} n={} length_m={:.3} elapsed_ms={:.1}",
        s.method,
        set.len(),
        s.tour.length_m(),
        s.elapsed_ms
    );
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let methods = a
        .methods
        .iter()
        .map(|m| check_method(m).map(str::to_string))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = SuiteConfig {
        methods,
        sizes: a.sizes.clone(),
        repeats: a.repeats,
        seed: a.seed,
        budget: Budget {
            max_iters: a.iters,
            time_ms: Some(a.budget_ms),
        },
        keep_traces: !a.no_traces,
    };
    cfg.validate()?;
    let (runs, report) = bench::run_suite(&cfg)?;
    std::fs::create_dir_all(&a.out)?;
    bench::emit_report(&report, &a.out, &ReportFormat::ALL)?;
    if cfg.keep_traces {
        let traces = bench::write_traces(&runs, &a.out.join("traces"))?;
        write_curves(&runs, &cfg, &a.out)?;
        eprintln!("wrote {} trace files", traces.len());
    }
    for r in runs.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "run failed: {} n={} run={}: {}",
            r.method,
            r.size,
            r.run,
            r.error.as_deref().unwrap_or_default()
        );
    }
    print!("{}", report.to_markdown());
    if !report.rows.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_RUNTIME,
            message: "every run failed".into(),
        })
    }
}

/// One running-average cost-time plot per size, using each method's first run.
fn write_curves(runs: &[bench::RunResult], cfg: &SuiteConfig, dir: &Path) -> CmdResult {
    for &n in &cfg.sizes {
        let mut series = Vec::new();
        for m in &cfg.methods {
            let first = runs.iter().find(|r| &r.method == m && r.size == n && r.run == 0);
            if let Some(trace) = first.and_then(|r| r.trace.as_ref()) {
                let smooth = bench::smooth_trace(trace, 5)?;
                series.push(Series {
                    label: m.clone(),
                    points: smooth.samples.iter().map(|s| (s.elapsed_ms, s.best_cost_m)).collect(),
                });
            }
        }
        let chart = svg::line_chart(&format!("Running-average cost, n = {n}"), "elapsed (ms)", "tour length (m)", &series);
        data::write_atomic(&dir.join(format!("curves_{n}.svg")), chart.as_bytes())?;
    }
    Ok(())
}

fn parse_start(s: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::usage(format!("--start expects x1,x2, got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let x1 = a.trim().parse().map_err(|_| bad())?;
    let x2 = b.trim().parse().map_err(|_| bad())?;
    Ok((x1, x2))
}

fn cmd_landscape(a: LandscapeArgs) -> CmdResult {
    let kind: Landscape = a.kind.parse().map_err(|e: Error| Failure::usage(e.to_string()))?;
    let (x1, x2) = parse_start(&a.start)?;
    GridPos::exact(x1, x2).map_err(|e| Failure::usage(e.to_string()))?;
    let trace = match a.method.as_str() {
        "hc" => landscape::hc_walk(kind, (x1, x2), a.max_iters)?,
        "sa" => landscape::sa_walk(kind, (x1, x2), a.t0, a.alpha, a.seed, a.max_iters)?,
        other => return Err(Failure::usage(format!("--method must be hc or sa, got {other:?}"))),
    };
    let kind_name = match kind {
        Landscape::SinglePeak => "single",
        Landscape::MultiPeak => "multi",
    };
    let stem = format!("landscape_{kind_name}_{}", a.method);
    std::fs::create_dir_all(&a.out_dir)?;
    data::write_atomic(&a.out_dir.join(format!("{stem}.csv")), trace.to_csv().as_bytes())?;
    write_landscape_plots(&trace, &a.out_dir, &stem, &a.method)?;

    let last = trace.last().expect("walk records its start");
    println!(
        "kind={kind_name} method={} start={x1},{x2} final=({},{}) objective={} best={} steps={}",
        a.method,
        last.x1,
        last.x2,
        last.objective,
        trace.best_objective(),
        trace.steps()
    );
    Ok(())
}

fn write_landscape_plots(trace: &WalkTrace, dir: &Path, stem: &str, method: &str) -> CmdResult {
    let cost = Series {
        label: "objective".into(),
        points: trace.records.iter().map(|r| (r.iteration as f64, r.objective)).collect(),
    };
    let chart = svg::line_chart(&format!("{} objective", method.to_uppercase()), "iteration", "objective", &[cost]);
    data::write_atomic(&dir.join(format!("{stem}.svg")), chart.as_bytes())?;
    if method == "sa" {
        let pick = |f: fn(&landscape::WalkRecord) -> Option<f64>| -> Vec<(f64, f64)> {
            trace.records.iter().filter_map(|r| f(r).map(|v| (r.iteration as f64, v))).collect()
        };
        let series = [
            Series {
                label: "temperature".into(),
                points: pick(|r| r.temperature),
            },
            Series {
                label: "acceptance probability".into(),
                points: pick(|r| r.acceptance_prob),
            },
        ];
        let chart = svg::line_chart("SA schedule", "iteration", "value", &series);
        data::write_atomic(&dir.join(format!("{stem}_schedule.svg")), chart.as_bytes())?;
    }
    Ok(())
}

fn bounding_box(area: &BoxArgs) -> Result<BoundingBox, Failure> {
    let b = match &area.bbox {
        None if area.planar => return Err(Failure::usage("--planar needs --bbox")),
        None => return Ok(BoundingBox::default_site()),
        Some(b) if b.len() == 4 => b,
        Some(b) => return Err(Failure::usage(format!("--bbox needs 4 numbers, got {}", b.len()))),
    };
    let r = if area.planar {
        BoundingBox::planar(b[0], b[1], b[2], b[3])
    } else {
        BoundingBox::geographic(b[0], b[1], b[2], b[3])
    };
    r.map_err(|e| Failure::usage(e.to_string()))
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let bbox = bounding_box(&a.area)?;
    let format = file_format(a.format.as_deref(), &a.out)?;
    let set = data::generate_dataset(a.n, &bbox, a.seed)?;
    data::save_waypoints(&set, &a.out, format)?;
    println!("wrote {} waypoints to {}", set.len(), a.out.display());
    Ok(())
}

fn cmd_grid(a: GridArgs) -> CmdResult {
    let bbox = bounding_box(&a.area)?;
    let format = file_format(a.format.as_deref(), &a.out)?;
    let set = data::grid_points(&bbox, a.rows, a.cols)?;
    data::save_waypoints(&set, &a.out, format)?;
    println!("wrote {} waypoints to {}", set.len(), a.out.display());
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> CmdResult {
    let defaults = ServiceConfig::default();
    let cfg = ServiceConfig {
        port: a.port,
        max_concurrent: a.max_concurrent.unwrap_or(defaults.max_concurrent),
        cors_origin: a.cors_origin,
        static_dir: a.static_dir,
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(waypoint_tsp_service::serve(cfg))?;
    Ok(())
}
