//! Batch experiment execution: every (seed × strategy) cell of a
//! config, a bounded worker pool, and deterministic artifacts.
//!
//! Missions run under the null clock, so every output file — per-step
//! CSVs, mission JSONs, `summary.csv`, `curves.csv`, `detections.csv`
//! and `run.json` — is a pure function of (config, seeds); re-running a
//! config reproduces each byte. The price is that GP timing fields are
//! zero; timing behavior is exercised by the library's test suite, not
//! by the runner.
//!
//! Worker count comes from `HOTSPOT_IPP_THREADS` (default: available
//! parallelism). Cells are claimed from a shared counter and results
//! are re-ordered after the join, so the thread count never changes any
//! artifact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{anyhow, bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use hotspot_core::baseline::{run_bst_mission, vertical_strips, BoustrophedonPlan};
use hotspot_core::clock::NullClock;
use hotspot_core::gp::{optimize_hyperparameters, OptimizeOptions};
use hotspot_core::metrics::{
    avg_cumulative_regret, checkpoint_curves, detection_times, distance_error, mission_report,
    rmse, terminal_regret, CurvePoint, FieldSummary,
};
use hotspot_core::multirobot::{
    robot_seed, robot_sensor_seed, run_fleet, EpochSnapshot, FleetConfig, PartitionMode,
};
use hotspot_core::planner::PlannerConfig;
use hotspot_core::strategy::{run_mission, MissionConfig, MissionLog};
use hotspot_core::{
    EvalGrid, GpModel, GriddedField, Hyperparameters, Point2, Pose, Region, Sensor, SpatialField,
    SyntheticField,
};

use crate::config::{ExperimentConfig, FieldSpec, PartitionSpec, StrategyName, CONFIG_VERSION};
use crate::dataset::load_gridded_field;

/// Command-line overrides applied before a run.
#[derive(Debug, Default)]
pub struct RunOptions {
    /// Replace the config's seed list with `0..n`.
    pub seeds: Option<usize>,
    /// Replace the config's output directory.
    pub out: Option<PathBuf>,
    pub dry_run: bool,
}

pub enum LoadedField {
    Synthetic(SyntheticField),
    Gridded(GriddedField),
}

impl LoadedField {
    pub fn load(spec: &FieldSpec) -> Result<Self> {
        match spec {
            FieldSpec::Synthetic => Ok(Self::Synthetic(SyntheticField::four_maxima())),
            FieldSpec::Dataset(path) => Ok(Self::Gridded(load_gridded_field(path)?)),
        }
    }

    pub fn as_field(&self) -> &dyn SpatialField {
        match self {
            Self::Synthetic(f) => f,
            Self::Gridded(f) => f,
        }
    }

    /// Value range the noise percentage refers to. The synthetic
    /// benchmark maps into [0, 1] by construction; a gridded field's
    /// range is that of its measured nodes.
    pub fn value_range(&self) -> f64 {
        match self {
            Self::Synthetic(_) => 1.0,
            Self::Gridded(f) => {
                let values = f.node_values();
                let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
                max - min
            }
        }
    }
}

/// The config after every default and derived quantity is materialized;
/// embedded verbatim in `run.json` so a run documents itself.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub name: String,
    pub field: FieldSpec,
    pub strategies: Vec<StrategyName>,
    pub seeds: Vec<u64>,
    pub budget: f64,
    pub eta: f64,
    pub noise_percent: f64,
    /// `noise_percent` of the field's value range.
    pub noise_std: f64,
    pub start: Vec<[f64; 2]>,
    pub fleet: Option<crate::config::FleetSpec>,
    pub true_hyper: Hyperparameters,
    pub adapt_hyper: Hyperparameters,
    pub opt_init_hyper: Hyperparameters,
    pub planner: PlannerConfig,
    pub lane_spacing: f64,
    pub detection_radius: f64,
    pub curve_every: f64,
    pub output_dir: PathBuf,
}

impl Resolved {
    pub fn new(cfg: &ExperimentConfig, field: &LoadedField) -> Self {
        let planner = cfg.planner.resolve();
        let noise_std = cfg.noise_percent / 100.0 * field.value_range();
        let noise_var = noise_std * noise_std;
        let region = field.as_field().region();
        let diag = region.diagonal();
        let adapt_l = cfg.hyper.adapt_length_scales.unwrap_or([diag, diag]);
        let opt_l = cfg
            .hyper
            .opt_init_length_scales
            .unwrap_or([diag / 4.0, diag / 4.0]);
        Resolved {
            name: cfg.name.clone(),
            field: cfg.field.clone(),
            strategies: cfg.strategies.clone(),
            seeds: cfg.seeds.clone(),
            budget: cfg.budget,
            eta: cfg.eta,
            noise_percent: cfg.noise_percent,
            noise_std,
            start: cfg.start.clone(),
            fleet: cfg.fleet,
            true_hyper: Hyperparameters::new(
                cfg.hyper.signal_std,
                cfg.hyper.length_scales,
                noise_var,
            ),
            adapt_hyper: Hyperparameters::new(
                cfg.hyper.adapt_signal_std.unwrap_or(1.0),
                adapt_l,
                noise_var,
            ),
            opt_init_hyper: Hyperparameters::new(
                cfg.hyper.opt_init_signal_std.unwrap_or(1.0),
                opt_l,
                noise_var,
            ),
            planner,
            lane_spacing: cfg.lane_spacing(),
            detection_radius: cfg.detection_radius,
            curve_every: cfg.curve_every,
            output_dir: cfg.output_dir.clone(),
        }
    }

    fn initial_hyper(&self, strategy: StrategyName) -> Hyperparameters {
        match strategy {
            StrategyName::Bst | StrategyName::TrueGp => self.true_hyper,
            StrategyName::AdaptGp => self.adapt_hyper,
            StrategyName::OptGp => self.opt_init_hyper,
        }
    }

    fn start_pose(&self, robot: usize, region: &Region) -> Pose {
        let [x, y] = self.start[robot];
        Pose::facing_center(Point2::new(x, y), region)
    }
}

/// Paths of the aggregate artifacts a run produced.
#[derive(Debug)]
pub struct RunPaths {
    pub dir: PathBuf,
    pub summary: PathBuf,
    pub curves: PathBuf,
    pub detections: PathBuf,
    pub run_json: PathBuf,
}

/// Load a config, apply overrides, and run (or describe) it.
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(n) = opts.seeds {
        if n == 0 {
            bail!("--seeds must be at least 1");
        }
        cfg.seeds = (0..n as u64).collect();
    }
    if let Some(dir) = &opts.out {
        cfg.output_dir = dir.clone();
    }
    cfg.validate()?;

    if opts.dry_run {
        print!("{}", dry_run_plan(&cfg)?);
        return Ok(());
    }
    let paths = execute(&cfg)?;
    println!("wrote {}", paths.summary.display());
    Ok(())
}

/// Human-readable resolved plan; printed by `--dry-run`.
pub fn dry_run_plan(cfg: &ExperimentConfig) -> Result<String> {
    let field = LoadedField::load(&cfg.field)?;
    let res = Resolved::new(cfg, &field);
    let region = *field.as_field().region();
    let threads = worker_count(res.strategies.len() * res.seeds.len())?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "experiment {} (config version {CONFIG_VERSION})",
        res.name
    );
    let kind = match &res.field {
        FieldSpec::Synthetic => "synthetic four-maxima benchmark".to_string(),
        FieldSpec::Dataset(p) => format!("gridded dataset {}", p.display()),
    };
    let _ = writeln!(
        s,
        "  field: {kind}, region [{}, {}] x [{}, {}]",
        region.x_min, region.x_max, region.y_min, region.y_max
    );
    let _ = writeln!(
        s,
        "  noise: {}% of value range {} -> std {}",
        res.noise_percent,
        field.value_range(),
        res.noise_std
    );
    match &res.fleet {
        Some(f) => {
            let _ = writeln!(
                s,
                "  fleet: {} robots, {} epochs x {} steps, partition {:?}, budget {} per robot",
                f.robots, f.epochs, f.steps_per_epoch, f.partition, res.budget
            );
        }
        None => {
            let _ = writeln!(
                s,
                "  single robot from ({}, {}), budget {}, eta {}",
                res.start[0][0], res.start[0][1], res.budget, res.eta
            );
        }
    }
    let strategies: Vec<String> = res.strategies.iter().map(|x| x.to_string()).collect();
    let _ = writeln!(
        s,
        "  cells: {} strategies {{{}}} x {} seeds = {} missions on {} worker(s)",
        res.strategies.len(),
        strategies.join(", "),
        res.seeds.len(),
        res.strategies.len() * res.seeds.len(),
        threads
    );
    let _ = writeln!(s, "  output: {}", res.output_dir.display());
    Ok(s)
}

/// Run every cell and write all artifacts. The heavy lifting happens on
/// `HOTSPOT_IPP_THREADS` workers; aggregation is single-threaded after
/// the join so artifact bytes never depend on scheduling.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunPaths> {
    let field = LoadedField::load(&cfg.field)?;
    let res = Resolved::new(cfg, &field);
    let summary = FieldSummary::compute(field.as_field(), res.planner.grid_resolution());

    let cells: Vec<(StrategyName, u64)> = res
        .strategies
        .iter()
        .flat_map(|s| res.seeds.iter().map(move |seed| (*s, *seed)))
        .collect();
    let threads = worker_count(cells.len())?;

    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<CellOutcome>>> = Vec::new();
    slots.resize_with(cells.len(), || None);
    let collected: Vec<Vec<(usize, Result<CellOutcome>)>> = std::thread::scope(|scope| {
        let workers: Vec<_> = (0..threads)
            .map(|_| {
                let next = &next;
                let cells = &cells;
                let field = &field;
                let res = &res;
                let summary = &summary;
                scope.spawn(move || {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= cells.len() {
                            return done;
                        }
                        let (strategy, seed) = cells[i];
                        done.push((i, run_cell(field, summary, res, strategy, seed)));
                    }
                })
            })
            .collect();
        workers
            .into_iter()
            .map(|w| w.join().expect("worker panicked"))
            .collect()
    });
    for (i, outcome) in collected.into_iter().flatten() {
        slots[i] = Some(outcome);
    }

    let mut outcomes = Vec::with_capacity(cells.len());
    for (slot, (strategy, seed)) in slots.into_iter().zip(&cells) {
        let outcome = slot
            .expect("every cell index was claimed exactly once")
            .with_context(|| format!("cell {strategy} seed {seed} failed"))?;
        eprintln!(
            "done {strategy} seed {seed}: terminal regret {:.2}%",
            outcome.metrics.pct_terminal_regret
        );
        outcomes.push(outcome);
    }

    write_artifacts(&res, &field, &summary, &outcomes)
}

fn worker_count(cells: usize) -> Result<usize> {
    let n = match std::env::var("HOTSPOT_IPP_THREADS") {
        Ok(raw) => raw
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| {
                anyhow!("HOTSPOT_IPP_THREADS must be a positive integer (got `{raw}`)")
            })?,
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(n.min(cells.max(1)))
}

/// Everything one (strategy, seed) cell produces.
struct CellOutcome {
    strategy: StrategyName,
    seed: u64,
    /// One log for a single mission, one per robot for fleets.
    logs: Vec<MissionLog>,
    epochs: Option<Vec<EpochSummary>>,
    x_hat: Point2,
    pre_report_hyper: Hyperparameters,
    final_hyper: Hyperparameters,
    metrics: CellMetrics,
    curves: Vec<CurvePoint>,
}

#[derive(Serialize)]
struct CellMetrics {
    pct_terminal_regret: f64,
    pct_avg_cumulative_regret: f64,
    pct_rmse: f64,
    pct_distance: f64,
    detection_times: BTreeMap<usize, f64>,
}

/// Per-epoch partition snapshot in the fleet JSON summary: generators,
/// cell occupancy, and the logged centroids, but not the full grid
/// assignment.
#[derive(Serialize)]
struct EpochSummary {
    generators: Vec<[f64; 2]>,
    cell_sizes: Option<Vec<usize>>,
    degenerate: Vec<bool>,
    centroids: Option<Vec<Option<[f64; 2]>>>,
}

impl EpochSummary {
    fn new(snapshot: &EpochSnapshot, robots: usize) -> Self {
        let cell_sizes = snapshot.assignment.as_ref().map(|owners| {
            let mut sizes = vec![0usize; robots];
            for r in owners {
                sizes[*r] += 1;
            }
            sizes
        });
        EpochSummary {
            generators: snapshot.generators.iter().map(|p| [p.x, p.y]).collect(),
            cell_sizes,
            degenerate: snapshot.degenerate.clone(),
            centroids: snapshot
                .centroids
                .as_ref()
                .map(|cs| cs.iter().map(|c| c.map(|p| [p.x, p.y])).collect()),
        }
    }
}

fn run_cell(
    field: &LoadedField,
    summary: &FieldSummary,
    res: &Resolved,
    strategy: StrategyName,
    seed: u64,
) -> Result<CellOutcome> {
    match &res.fleet {
        None => run_single_cell(field, summary, res, strategy, seed),
        Some(fleet) => run_fleet_cell(field, summary, res, *fleet, strategy, seed),
    }
}

fn mission_config(
    res: &Resolved,
    strategy: StrategyName,
    seed: u64,
    region: &Region,
) -> MissionConfig {
    let mut config = MissionConfig::new(
        strategy.kind(),
        res.start_pose(0, region),
        res.initial_hyper(strategy),
    );
    config.budget = res.budget;
    config.eta = res.eta;
    config.planner = res.planner;
    config.seed = seed;
    config
}

fn run_single_cell(
    field: &LoadedField,
    summary: &FieldSummary,
    res: &Resolved,
    strategy: StrategyName,
    seed: u64,
) -> Result<CellOutcome> {
    let f = field.as_field();
    let region = *f.region();
    let config = mission_config(res, strategy, seed, &region);
    let mut sensor = Sensor::new(res.noise_std, robot_sensor_seed(seed, 0))?;

    let log = match strategy {
        StrategyName::Bst => {
            let mut plan_rng = ChaCha8Rng::seed_from_u64(seed);
            let plan = BoustrophedonPlan::randomized(region, res.lane_spacing, &mut plan_rng)?;
            run_bst_mission(f, &mut sensor, &plan, &config, &NullClock)?
        }
        _ => run_mission(f, &mut sensor, &config, &NullClock)?,
    };

    let report = mission_report(f, summary, &log, res.detection_radius)?;
    let curves = checkpoint_curves(f, summary, &log, res.curve_every)?;
    Ok(CellOutcome {
        strategy,
        seed,
        x_hat: log.x_hat,
        pre_report_hyper: log.pre_report_hyper,
        final_hyper: log.final_hyper,
        metrics: CellMetrics {
            pct_terminal_regret: report.pct_terminal_regret,
            pct_avg_cumulative_regret: report.pct_avg_cumulative_regret,
            pct_rmse: report.pct_rmse,
            pct_distance: report.pct_distance,
            detection_times: report.detection_times,
        },
        curves,
        epochs: None,
        logs: vec![log],
    })
}

fn run_fleet_cell(
    field: &LoadedField,
    summary: &FieldSummary,
    res: &Resolved,
    fleet: crate::config::FleetSpec,
    strategy: StrategyName,
    seed: u64,
) -> Result<CellOutcome> {
    let f = field.as_field();
    let region = *f.region();

    if strategy == StrategyName::Bst {
        return run_bst_fleet_cell(field, summary, res, fleet, seed);
    }

    let mut config = FleetConfig::new(
        fleet.robots,
        fleet.epochs,
        fleet.steps_per_epoch,
        (0..fleet.robots)
            .map(|r| res.start_pose(r, &region))
            .collect(),
        strategy.kind(),
        res.initial_hyper(strategy),
    );
    config.partition = match fleet.partition {
        PartitionSpec::Voronoi => PartitionMode::Voronoi,
        PartitionSpec::None => PartitionMode::None,
    };
    config.planner = res.planner;
    config.eta = res.eta;
    config.noise_std = res.noise_std;
    config.seed = seed;

    let log = run_fleet(f, &config, &NullClock)?;
    let metrics = fleet_metrics(
        field,
        summary,
        &log.robots,
        log.x_hat,
        log.final_hyper,
        res.detection_radius,
    )?;
    Ok(CellOutcome {
        strategy,
        seed,
        x_hat: log.x_hat,
        pre_report_hyper: log.pre_report_hyper,
        final_hyper: log.final_hyper,
        metrics,
        curves: Vec::new(),
        epochs: Some(
            log.epochs
                .iter()
                .map(|e| EpochSummary::new(e, fleet.robots))
                .collect(),
        ),
        logs: log.robots,
    })
}

/// Coverage-baseline fleet: one fixed vertical strip per robot, swept
/// independently; the report is computed from the pooled samples the
/// same way a planning fleet reports (full kernel fit, posterior-mean
/// argmax on the grid).
fn run_bst_fleet_cell(
    field: &LoadedField,
    summary: &FieldSummary,
    res: &Resolved,
    fleet: crate::config::FleetSpec,
    seed: u64,
) -> Result<CellOutcome> {
    let f = field.as_field();
    let region = *f.region();
    let strips = vertical_strips(&region, fleet.robots);

    let mut logs = Vec::with_capacity(fleet.robots);
    for (r, strip) in strips.iter().enumerate() {
        let mut config = mission_config(res, StrategyName::Bst, robot_seed(seed, r), &region);
        config.start_pose = res.start_pose(r, &region);
        let mut plan_rng = ChaCha8Rng::seed_from_u64(robot_seed(seed, r));
        let plan = BoustrophedonPlan::randomized(*strip, res.lane_spacing, &mut plan_rng)?;
        let mut sensor = Sensor::new(res.noise_std, robot_sensor_seed(seed, r))?;
        logs.push(run_bst_mission(f, &mut sensor, &plan, &config, &NullClock)?);
    }

    let (xs, ys) = pooled_observations(&logs);
    let mut gp = GpModel::with_data(res.true_hyper, xs, ys)?;
    let opt = optimize_hyperparameters(&gp, &res.true_hyper, &OptimizeOptions::full());
    if *gp.hyper() != opt.hyper {
        gp.set_hyperparameters(opt.hyper)?;
    }
    let grid = EvalGrid::square(region, res.planner.grid_resolution());
    let means = gp.predict_mean(&grid.points());
    let x_hat = grid.point(grid.argmax_index(&means));

    let metrics = fleet_metrics(
        field,
        summary,
        &logs,
        x_hat,
        opt.hyper,
        res.detection_radius,
    )?;
    Ok(CellOutcome {
        strategy: StrategyName::Bst,
        seed,
        x_hat,
        pre_report_hyper: res.true_hyper,
        final_hyper: opt.hyper,
        metrics,
        curves: Vec::new(),
        epochs: None,
        logs,
    })
}

/// Pool per-robot observations step-major, robot-minor — chronological
/// order for lockstep robots.
fn pooled_observations(logs: &[MissionLog]) -> (Vec<Point2>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let max_steps = logs.iter().map(|l| l.steps.len()).max().unwrap_or(0);
    for s in 0..max_steps {
        for log in logs {
            if let Some(step) = log.steps.get(s) {
                xs.push(step.pose.position);
                ys.push(step.measurement);
            }
        }
    }
    (xs, ys)
}

/// The single-mission metrics, evaluated on the fleet's shared answer
/// and pooled samples.
fn fleet_metrics(
    field: &LoadedField,
    summary: &FieldSummary,
    logs: &[MissionLog],
    x_hat: Point2,
    final_hyper: Hyperparameters,
    detection_radius: f64,
) -> Result<CellMetrics> {
    let f = field.as_field();
    let (xs, ys) = pooled_observations(logs);
    let gp = GpModel::with_data(final_hyper, xs.clone(), ys)?;
    let hotspots = f.hotspots();
    let detection = if hotspots.is_empty() {
        BTreeMap::new()
    } else {
        detection_times(logs, hotspots, detection_radius)
    };
    Ok(CellMetrics {
        pct_terminal_regret: terminal_regret(f, summary, x_hat),
        pct_avg_cumulative_regret: avg_cumulative_regret(f, summary, &xs),
        pct_rmse: rmse(f, summary, &gp),
        pct_distance: distance_error(&summary.region, x_hat, summary.x_star),
        detection_times: detection,
    })
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunJson<'a> {
    code_version: &'static str,
    config: &'a Resolved,
    field: FieldInfo,
    cells: Vec<CellJson<'a>>,
}

#[derive(Serialize)]
struct FieldInfo {
    region: Region,
    value_range: f64,
    x_star: [f64; 2],
    f_star: f64,
    hotspots: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct CellJson<'a> {
    strategy: String,
    seed: u64,
    x_hat: [f64; 2],
    measurements: usize,
    distance_traveled: f64,
    truncated: bool,
    metrics: &'a CellMetrics,
}

#[derive(Serialize)]
struct MissionJson<'a> {
    strategy: String,
    seed: u64,
    robots: usize,
    x_hat: [f64; 2],
    pre_report_hyper: Hyperparameters,
    final_hyper: Hyperparameters,
    measurements: usize,
    distance_traveled: f64,
    truncated: bool,
    gp_seconds_total: f64,
    metrics: &'a CellMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    epochs: &'a Option<Vec<EpochSummary>>,
}

fn write_artifacts(
    res: &Resolved,
    field: &LoadedField,
    summary: &FieldSummary,
    outcomes: &[CellOutcome],
) -> Result<RunPaths> {
    let dir = res.output_dir.clone();
    let missions = dir.join("missions");
    fs::create_dir_all(&missions)
        .with_context(|| format!("failed to create {}", missions.display()))?;

    for outcome in outcomes {
        let stem = format!("{}-seed{}", outcome.strategy, outcome.seed);
        if outcome.logs.len() == 1 {
            write_steps_csv(&missions.join(format!("{stem}.csv")), &outcome.logs[0])?;
        } else {
            for (r, log) in outcome.logs.iter().enumerate() {
                write_steps_csv(&missions.join(format!("{stem}-robot{r}.csv")), log)?;
            }
        }
        let mission = MissionJson {
            strategy: outcome.strategy.to_string(),
            seed: outcome.seed,
            robots: outcome.logs.len(),
            x_hat: [outcome.x_hat.x, outcome.x_hat.y],
            pre_report_hyper: outcome.pre_report_hyper,
            final_hyper: outcome.final_hyper,
            measurements: outcome.logs.iter().map(|l| l.measurements).sum(),
            distance_traveled: outcome.logs.iter().map(|l| l.distance_traveled).sum(),
            truncated: outcome.logs.iter().any(|l| l.truncated),
            gp_seconds_total: outcome.logs.iter().map(|l| l.gp_seconds_total).sum(),
            metrics: &outcome.metrics,
            epochs: &outcome.epochs,
        };
        write_json(&missions.join(format!("{stem}.json")), &mission)?;
    }

    let hotspot_count = field.as_field().hotspots().len();
    let summary_path = dir.join("summary.csv");
    write_summary_csv(&summary_path, res, outcomes, hotspot_count)?;
    let curves_path = dir.join("curves.csv");
    write_curves_csv(&curves_path, outcomes)?;
    let detections_path = dir.join("detections.csv");
    write_detections_csv(&detections_path, outcomes)?;

    let run_json = RunJson {
        code_version: env!("CARGO_PKG_VERSION"),
        config: res,
        field: FieldInfo {
            region: summary.region,
            value_range: field.value_range(),
            x_star: [summary.x_star.x, summary.x_star.y],
            f_star: summary.f_star,
            hotspots: field
                .as_field()
                .hotspots()
                .iter()
                .map(|p| [p.x, p.y])
                .collect(),
        },
        cells: outcomes
            .iter()
            .map(|o| CellJson {
                strategy: o.strategy.to_string(),
                seed: o.seed,
                x_hat: [o.x_hat.x, o.x_hat.y],
                measurements: o.logs.iter().map(|l| l.measurements).sum(),
                distance_traveled: o.logs.iter().map(|l| l.distance_traveled).sum(),
                truncated: o.logs.iter().any(|l| l.truncated),
                metrics: &o.metrics,
            })
            .collect(),
    };
    let run_json_path = dir.join("run.json");
    write_json(&run_json_path, &run_json)?;

    Ok(RunPaths {
        dir,
        summary: summary_path,
        curves: curves_path,
        detections: detections_path,
        run_json: run_json_path,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("failed to write {}", path.display()))
}

fn write_steps_csv(path: &Path, log: &MissionLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("failed to write {}", path.display()))?;
    w.write_record([
        "t",
        "x",
        "y",
        "heading",
        "measurement",
        "signal_std",
        "length_scale_x",
        "length_scale_y",
        "noise_var",
        "beta",
        "gp_seconds",
    ])?;
    for s in &log.steps {
        w.write_record([
            s.t.to_string(),
            s.pose.position.x.to_string(),
            s.pose.position.y.to_string(),
            s.pose.heading.to_string(),
            s.measurement.to_string(),
            s.hyper.signal_std.to_string(),
            s.hyper.length_scales[0].to_string(),
            s.hyper.length_scales[1].to_string(),
            s.hyper.noise_var.to_string(),
            s.beta.to_string(),
            s.gp_seconds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Sample mean and standard deviation (n-1 denominator; 0 for n = 1).
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One row per strategy: mean ± std of the four percent metrics over
/// the seeds, plus time-to-j-hotspots columns when the field has a
/// known hotspot list. Undetected trials are excluded from the time
/// statistics; the `_detected` column says how many trials count.
fn write_summary_csv(
    path: &Path,
    res: &Resolved,
    outcomes: &[CellOutcome],
    hotspot_count: usize,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("failed to write {}", path.display()))?;
    let mut header = vec![
        "run".to_string(),
        "strategy".to_string(),
        "seeds".to_string(),
    ];
    for metric in METRIC_COLUMNS {
        header.push(format!("{metric}_mean"));
        header.push(format!("{metric}_std"));
    }
    for j in 1..=hotspot_count {
        header.push(format!("time_to_{j}_mean"));
        header.push(format!("time_to_{j}_std"));
        header.push(format!("time_to_{j}_detected"));
    }
    w.write_record(&header)?;

    for strategy in &res.strategies {
        let cells: Vec<&CellOutcome> = outcomes
            .iter()
            .filter(|o| o.strategy == *strategy)
            .collect();
        let mut row = vec![
            res.name.clone(),
            strategy.to_string(),
            cells.len().to_string(),
        ];
        for pick in [
            |m: &CellMetrics| m.pct_terminal_regret,
            |m: &CellMetrics| m.pct_avg_cumulative_regret,
            |m: &CellMetrics| m.pct_rmse,
            |m: &CellMetrics| m.pct_distance,
        ] {
            let values: Vec<f64> = cells.iter().map(|c| pick(&c.metrics)).collect();
            let (mean, std) = mean_std(&values);
            row.push(mean.to_string());
            row.push(std.to_string());
        }
        for j in 1..=hotspot_count {
            let times: Vec<f64> = cells
                .iter()
                .filter_map(|c| c.metrics.detection_times.get(&j).copied())
                .collect();
            if times.is_empty() {
                row.push(String::new());
                row.push(String::new());
            } else {
                let (mean, std) = mean_std(&times);
                row.push(mean.to_string());
                row.push(std.to_string());
            }
            row.push(times.len().to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

const METRIC_COLUMNS: [&str; 4] = [
    "pct_terminal_regret",
    "pct_avg_cumulative_regret",
    "pct_rmse",
    "pct_distance",
];

/// Metric traces at every budget checkpoint, one row per
/// (strategy, seed, checkpoint). Fleet runs have no curves: the pooled
/// belief is only defined at surfacing events.
fn write_curves_csv(path: &Path, outcomes: &[CellOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("failed to write {}", path.display()))?;
    w.write_record([
        "strategy",
        "seed",
        "budget",
        "measurements",
        "pct_terminal_regret",
        "pct_avg_cumulative_regret",
        "pct_rmse",
        "pct_distance",
    ])?;
    for o in outcomes {
        for c in &o.curves {
            w.write_record([
                o.strategy.to_string(),
                o.seed.to_string(),
                c.budget.to_string(),
                c.measurements.to_string(),
                c.pct_terminal_regret.to_string(),
                c.pct_avg_cumulative_regret.to_string(),
                c.pct_rmse.to_string(),
                c.pct_distance.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-trial hotspot detection events in long format.
fn write_detections_csv(path: &Path, outcomes: &[CellOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("failed to write {}", path.display()))?;
    w.write_record(["strategy", "seed", "hotspots", "time"])?;
    for o in outcomes {
        for (j, t) in &o.metrics.detection_times {
            w.write_record([
                o.strategy.to_string(),
                o.seed.to_string(),
                j.to_string(),
                t.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
