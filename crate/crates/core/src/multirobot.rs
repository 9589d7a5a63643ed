//! Decentralized multi-robot coordination.
//!
//! A fleet of `k` robots shares one GP belief but communicates only at
//! epoch boundaries ("surfacing"). Each epoch the workspace is split by
//! a Voronoi partition generated from the robot positions; every robot
//! plans inside its own cell against a private replica of the shared
//! model, and the replicas' new samples are pooled back into the shared
//! model when the epoch ends. With `k = 1` the machinery degenerates to
//! exactly the single-robot mission loop, which is checked bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::field::{Sensor, SpatialField};
use crate::geom::{Point2, Pose, Region};
use crate::gp::{GpModel, Hyperparameters, OptimizeOptions};
use crate::grid::EvalGrid;
use crate::planner::{PlanSpace, PlannerConfig};
use crate::strategy::{
    engine_step, final_report, planning_hyper, remaining_travel, MissionConfig, MissionError,
    MissionLog, StepOutcome, StepRecord, StrategyKind,
};

/// Index of the generator nearest to `p`; distance ties go to the
/// lowest robot index. This single definition backs both the discrete
/// partition and the continuous cell-membership test.
pub fn nearest_generator(generators: &[Point2], p: Point2) -> usize {
    assert!(!generators.is_empty());
    let mut best = 0usize;
    let mut best_d = generators[0].distance_sq(p);
    for (i, g) in generators.iter().enumerate().skip(1) {
        let d = g.distance_sq(p);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Discrete Voronoi partition of an evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiPartition {
    pub generators: Vec<Point2>,
    /// `assignment[i]` is the robot owning grid node `i` (row-major).
    pub assignment: Vec<usize>,
}

impl VoronoiPartition {
    /// Number of grid nodes owned by each robot.
    pub fn cell_sizes(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.generators.len()];
        for &a in &self.assignment {
            counts[a] += 1;
        }
        counts
    }
}

/// Assign every grid node to its nearest generator.
pub fn compute_partition(generators: &[Point2], grid: &EvalGrid) -> VoronoiPartition {
    assert!(!generators.is_empty());
    let assignment = (0..grid.len())
        .map(|i| nearest_generator(generators, grid.point(i)))
        .collect();
    VoronoiPartition {
        generators: generators.to_vec(),
        assignment,
    }
}

/// One robot's cell as a continuous feasible set: inside the survey
/// region and closer to this robot's generator than to any other.
#[derive(Debug, Clone, Copy)]
pub struct VoronoiCell<'a> {
    pub region: &'a Region,
    pub generators: &'a [Point2],
    pub robot: usize,
}

impl PlanSpace for VoronoiCell<'_> {
    fn admits(&self, p: Point2) -> bool {
        self.region.contains(p) && nearest_generator(self.generators, p) == self.robot
    }
}

/// Mass-weighted centroid of a point set. Nonnegative weights; a total
/// mass at or below 1e-12 falls back to the unweighted centroid so
/// degenerate cells still yield a usable point.
pub fn weighted_centroid(points: &[Point2], weights: &[f64]) -> Point2 {
    assert_eq!(points.len(), weights.len());
    assert!(!points.is_empty(), "centroid of an empty cell");
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && total > 1e-12) {
        let n = points.len() as f64;
        let (sx, sy) = points
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        return Point2::new(sx / n, sy / n);
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for (p, w) in points.iter().zip(weights) {
        sx += p.x * w;
        sy += p.y * w;
    }
    Point2::new(sx / total, sy / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum PartitionMode {
    /// All robots plan over the whole region (the ablation baseline).
    None,
    /// Each robot is confined to its nearest-generator cell.
    Voronoi,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FleetConfig {
    pub robots: usize,
    /// Communication-free windows per mission.
    pub epochs: usize,
    /// Steps each robot takes per epoch.
    pub steps_per_epoch: usize,
    pub start_poses: Vec<Pose>,
    pub partition: PartitionMode,
    /// Kernel schedule shared by the fleet. The per-step re-optimizing
    /// strategy is single-robot only: replicas would diverge with no
    /// defined way to reconcile their kernels at the surfacing barrier.
    pub strategy: StrategyKind,
    pub initial_hyper: Hyperparameters,
    pub planner: PlannerConfig,
    /// Per-measurement budget surcharge, as in single missions.
    pub eta: f64,
    pub noise_std: f64,
    pub seed: u64,
    pub step_opt: OptimizeOptions,
    pub final_opt: OptimizeOptions,
    /// Record per-epoch weighted cell centroids (diagnostic).
    pub log_centroids: bool,
}

impl FleetConfig {
    pub fn new(
        robots: usize,
        epochs: usize,
        steps_per_epoch: usize,
        start_poses: Vec<Pose>,
        strategy: StrategyKind,
        initial_hyper: Hyperparameters,
    ) -> Self {
        Self {
            robots,
            epochs,
            steps_per_epoch,
            start_poses,
            partition: PartitionMode::Voronoi,
            strategy,
            initial_hyper,
            planner: PlannerConfig::default(),
            eta: 0.0,
            noise_std: 0.05,
            seed: 0,
            step_opt: OptimizeOptions::warm(30),
            final_opt: OptimizeOptions::full(),
            log_centroids: true,
        }
    }

    pub fn validate(&self, region: &Region) -> Result<(), MissionError> {
        if self.robots == 0 {
            return Err(MissionError::BadConfig("fleet needs at least one robot"));
        }
        if self.start_poses.len() != self.robots {
            return Err(MissionError::BadConfig(
                "start pose count must match the robot count",
            ));
        }
        if self.epochs == 0 || self.steps_per_epoch == 0 {
            return Err(MissionError::BadConfig(
                "epochs and steps per epoch must be positive",
            ));
        }
        if self.strategy == StrategyKind::OptGp {
            return Err(MissionError::BadConfig(
                "per-step re-optimization is single-robot only",
            ));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(MissionError::BadConfig("eta must be finite and >= 0"));
        }
        for pose in &self.start_poses {
            if !region.contains(pose.position) {
                return Err(MissionError::BadConfig("start pose outside the region"));
            }
        }
        self.initial_hyper.validate()?;
        self.planner.validate()?;
        Ok(())
    }

    /// Travel budget each robot gets over the whole mission.
    pub fn per_robot_budget(&self) -> f64 {
        (self.epochs * self.steps_per_epoch) as f64 * (self.planner.step_length + self.eta)
    }
}

/// Planner rng seed for robot `i`, splitting the fleet seed with a
/// Weyl-sequence increment. Robot 0 keeps the base seed, which is what
/// makes a one-robot fleet replay a single mission exactly.
pub fn robot_seed(base: u64, robot: usize) -> u64 {
    base.wrapping_add((robot as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Sensor rng seed for robot `i`, decorrelated from the planner stream.
pub fn robot_sensor_seed(base: u64, robot: usize) -> u64 {
    robot_seed(base, robot) ^ 0x517C_C1B7_2722_0A95
}

/// Per-epoch coordination snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSnapshot {
    /// Robot positions the epoch's partition was generated from.
    pub generators: Vec<Point2>,
    /// Grid-node ownership; `None` when partitioning is off.
    pub assignment: Option<Vec<usize>>,
    /// Robots whose discrete cell was empty this epoch; they plan
    /// unconstrained.
    pub degenerate: Vec<bool>,
    /// Belief-weighted centroid of each robot's cell, when logged.
    pub centroids: Option<Vec<Option<Point2>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetLog {
    /// Per-robot mission records. The report fields (`x_hat`, final
    /// hyperparameters) hold the fleet's shared answer on every robot.
    pub robots: Vec<MissionLog>,
    pub epochs: Vec<EpochSnapshot>,
    pub x_hat: Point2,
    pub pre_report_hyper: Hyperparameters,
    pub final_hyper: Hyperparameters,
    pub total_measurements: usize,
    /// All robots' GP seconds plus the shared report, counted once.
    pub gp_seconds_total: f64,
}

/// Run a decentralized fleet mission. Per epoch: partition from current
/// positions, give every robot a replica of the pooled model, let each
/// execute `steps_per_epoch` planning steps inside its cell, then pool
/// all new samples (step-major, robot-minor, i.e. chronologically for
/// lockstep robots) back into the shared model. After the last epoch
/// the shared model produces the same full-optimization report as a
/// single mission.
pub fn run_fleet<F, C>(field: &F, config: &FleetConfig, clock: &C) -> Result<FleetLog, MissionError>
where
    F: SpatialField + ?Sized,
    C: Clock,
{
    let region = *field.region();
    config.validate(&region)?;
    let k = config.robots;
    let step_cost = config.planner.step_length + config.eta;
    let budget = config.per_robot_budget();
    let grid = EvalGrid::square(region, config.planner.grid_resolution());

    let mut poses = config.start_poses.clone();
    let mut rngs: Vec<ChaCha8Rng> = (0..k)
        .map(|i| ChaCha8Rng::seed_from_u64(robot_seed(config.seed, i)))
        .collect();
    let mut sensors = Vec::with_capacity(k);
    for i in 0..k {
        sensors.push(Sensor::new(
            config.noise_std,
            robot_sensor_seed(config.seed, i),
        )?);
    }
    let mut step_logs: Vec<Vec<StepRecord>> = vec![Vec::new(); k];
    let mut gp_seconds: Vec<f64> = vec![0.0; k];
    let mut stuck = vec![false; k];

    let mut pooled_xs: Vec<Point2> = Vec::new();
    let mut pooled_ys: Vec<f64> = Vec::new();
    let mut combined = GpModel::new(config.initial_hyper)?;
    let mut epochs = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        let generators: Vec<Point2> = poses.iter().map(|p| p.position).collect();
        let (assignment, degenerate) = match config.partition {
            PartitionMode::Voronoi => {
                let partition = compute_partition(&generators, &grid);
                let degenerate: Vec<bool> =
                    partition.cell_sizes().iter().map(|&c| c == 0).collect();
                (Some(partition.assignment), degenerate)
            }
            PartitionMode::None => (None, vec![false; k]),
        };

        // Bring the shared model to the schedule's current kernel so
        // replicas start the epoch from the same belief a single robot
        // would hold.
        let hyper_now = planning_hyper(
            config.strategy,
            &config.initial_hyper,
            combined.len(),
            combined.hyper(),
        );
        if *combined.hyper() != hyper_now {
            combined.set_hyperparameters(hyper_now)?;
        }

        let centroids = if config.log_centroids {
            Some(epoch_centroids(&combined, &grid, assignment.as_deref(), k))
        } else {
            None
        };

        let mut epoch_obs: Vec<Vec<(Point2, f64)>> = vec![Vec::new(); k];
        for r in 0..k {
            if stuck[r] {
                continue;
            }
            let mut replica = combined.clone();
            let cell = VoronoiCell {
                region: &region,
                generators: &generators,
                robot: r,
            };
            let constrained = assignment.is_some() && !degenerate[r];
            let space: &dyn PlanSpace = if constrained { &cell } else { &region };
            for _ in 0..config.steps_per_epoch {
                let done = step_logs[r].len();
                let rollout = remaining_travel(budget, done, step_cost, config.planner.step_length);
                let outcome = engine_step(
                    field,
                    &mut sensors[r],
                    &mut replica,
                    poses[r],
                    config.strategy,
                    &config.initial_hyper,
                    rollout,
                    &config.step_opt,
                    &config.planner,
                    &space,
                    clock,
                    &mut rngs[r],
                )?;
                match outcome {
                    StepOutcome::Stuck => {
                        stuck[r] = true;
                        break;
                    }
                    StepOutcome::Stepped(step) => {
                        poses[r] = step.pose;
                        gp_seconds[r] += step.gp_seconds;
                        epoch_obs[r].push((step.pose.position, step.measurement));
                        step_logs[r].push(StepRecord {
                            t: done + 1,
                            pose: step.pose,
                            measurement: step.measurement,
                            hyper: step.hyper,
                            beta: step.beta,
                            gp_seconds: gp_seconds[r],
                        });
                    }
                }
            }
        }

        for s in 0..config.steps_per_epoch {
            for obs in epoch_obs.iter() {
                if let Some((x, y)) = obs.get(s) {
                    pooled_xs.push(*x);
                    pooled_ys.push(*y);
                }
            }
        }
        combined = GpModel::with_data(*combined.hyper(), pooled_xs.clone(), pooled_ys.clone())?;

        epochs.push(EpochSnapshot {
            generators,
            assignment,
            degenerate,
            centroids,
        });
    }

    let report = final_report(
        &mut combined,
        config.strategy,
        &config.initial_hyper,
        &config.final_opt,
        &config.planner,
        &region,
        clock,
    )?;

    let total_measurements = step_logs.iter().map(|s| s.len()).sum();
    let robots = step_logs
        .into_iter()
        .enumerate()
        .map(|(r, steps)| {
            let n = steps.len();
            MissionLog {
                config: MissionConfig {
                    budget,
                    eta: config.eta,
                    start_pose: config.start_poses[r],
                    strategy: config.strategy,
                    initial_hyper: config.initial_hyper,
                    planner: config.planner,
                    seed: robot_seed(config.seed, r),
                    step_opt: config.step_opt,
                    final_opt: config.final_opt,
                },
                steps,
                truncated: stuck[r],
                distance_traveled: n as f64 * config.planner.step_length,
                measurements: n,
                pre_report_hyper: report.pre_hyper,
                final_hyper: report.hyper,
                x_hat: report.x_hat,
                gp_seconds_total: gp_seconds[r] + report.gp_seconds,
            }
        })
        .collect();

    Ok(FleetLog {
        robots,
        epochs,
        x_hat: report.x_hat,
        pre_report_hyper: report.pre_hyper,
        final_hyper: report.hyper,
        total_measurements,
        gp_seconds_total: gp_seconds.iter().sum::<f64>() + report.gp_seconds,
    })
}

/// Belief-weighted centroid of every robot's cell: weights are the
/// shared model's posterior mean clamped at zero. Without a partition
/// each robot sees the whole grid, so all centroids coincide.
fn epoch_centroids(
    combined: &GpModel,
    grid: &EvalGrid,
    assignment: Option<&[usize]>,
    k: usize,
) -> Vec<Option<Point2>> {
    let points = grid.points();
    let means = combined.predict_mean(&points);
    (0..k)
        .map(|r| {
            let (mut cell_points, mut weights) = (Vec::new(), Vec::new());
            for (i, p) in points.iter().enumerate() {
                let owned = assignment.map(|a| a[i] == r).unwrap_or(true);
                if owned {
                    cell_points.push(*p);
                    weights.push(means[i].max(0.0));
                }
            }
            if cell_points.is_empty() {
                None
            } else {
                Some(weighted_centroid(&cell_points, &weights))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::NullClock;
    use crate::field::SyntheticField;
    use crate::strategy::run_mission;
    use approx::assert_relative_eq;
    use rand::Rng as _;
    use rand::SeedableRng;

    #[test]
    fn symmetric_generators_split_the_grid_with_ties_to_the_lower_index() {
        let region = Region::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let grid = EvalGrid::square(region, 5);
        let generators = [Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)];
        let partition = compute_partition(&generators, &grid);
        for (i, &owner) in partition.assignment.iter().enumerate() {
            let p = grid.point(i);
            let expect = if p.x < 0.0 {
                0
            } else if p.x > 0.0 {
                1
            } else {
                0 // tie column goes to the lower index
            };
            assert_eq!(owner, expect, "node {i} at ({}, {})", p.x, p.y);
        }
        assert_eq!(partition.cell_sizes(), vec![15, 10]);
    }

    #[test]
    fn partition_matches_a_brute_force_oracle() {
        let region = Region::new(-155.5, -129.5, 9.0, 35.0).unwrap();
        let grid = EvalGrid::square(region, 40);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let m = rng.random_range(1..6);
            let generators: Vec<Point2> = (0..m)
                .map(|_| {
                    Point2::new(
                        rng.random_range(region.x_min..region.x_max),
                        rng.random_range(region.y_min..region.y_max),
                    )
                })
                .collect();
            let partition = compute_partition(&generators, &grid);
            for i in 0..grid.len() {
                let p = grid.point(i);
                // Oracle: independent scan keeping the first strict
                // minimum.
                let mut best = 0;
                for (j, g) in generators.iter().enumerate() {
                    let dj = (g.x - p.x) * (g.x - p.x) + (g.y - p.y) * (g.y - p.y);
                    let db = (generators[best].x - p.x) * (generators[best].x - p.x)
                        + (generators[best].y - p.y) * (generators[best].y - p.y);
                    if dj < db {
                        best = j;
                    }
                }
                assert_eq!(partition.assignment[i], best);
            }
        }
    }

    #[test]
    fn weighted_centroid_hand_examples() {
        let points = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        let c = weighted_centroid(&points, &[1.0, 3.0]);
        assert_relative_eq!(c.x, 0.75);
        assert_relative_eq!(c.y, 0.0);

        // Uniform weights reduce to the arithmetic centroid.
        let tri = [
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 0.0),
            Point2::new(0.0, 3.0),
        ];
        let c = weighted_centroid(&tri, &[2.0, 2.0, 2.0]);
        assert_relative_eq!(c.x, 1.0);
        assert_relative_eq!(c.y, 1.0);

        // Zero mass falls back to the unweighted centroid.
        let c = weighted_centroid(&tri, &[0.0, 0.0, 0.0]);
        assert_relative_eq!(c.x, 1.0);
        assert_relative_eq!(c.y, 1.0);
    }

    #[test]
    fn weighted_centroid_is_scale_invariant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..12);
            let points: Vec<Point2> = (0..n)
                .map(|_| Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
                .collect();
            let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..10.0)).collect();
            let scale = rng.random_range(0.1..10.0);
            let scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
            let a = weighted_centroid(&points, &weights);
            let b = weighted_centroid(&points, &scaled);
            assert_relative_eq!(a.x, b.x, epsilon = 1e-9);
            assert_relative_eq!(a.y, b.y, epsilon = 1e-9);
        }
    }

    fn small_fleet(partition: PartitionMode, robots: usize) -> FleetConfig {
        let field = SyntheticField::four_maxima();
        let region = *field.region();
        let starts = [
            Point2::new(-149.0, 16.0),
            Point2::new(-136.0, 28.0),
            Point2::new(-148.0, 30.0),
        ];
        let mut config = FleetConfig::new(
            robots,
            2,
            5,
            starts[..robots]
                .iter()
                .map(|p| Pose::facing_center(*p, &region))
                .collect(),
            StrategyKind::TrueGp,
            Hyperparameters::new(0.251, [5.04, 5.04], 1e-5),
        );
        config.partition = partition;
        config.seed = 21;
        config
    }

    #[test]
    fn single_robot_fleet_replays_a_plain_mission_exactly() {
        let field = SyntheticField::four_maxima();
        let config = small_fleet(PartitionMode::Voronoi, 1);
        let fleet = run_fleet(&field, &config, &NullClock).unwrap();

        let mission_config = MissionConfig {
            budget: config.per_robot_budget(),
            eta: config.eta,
            start_pose: config.start_poses[0],
            strategy: config.strategy,
            initial_hyper: config.initial_hyper,
            planner: config.planner,
            seed: robot_seed(config.seed, 0),
            step_opt: config.step_opt,
            final_opt: config.final_opt,
        };
        let mut sensor = Sensor::new(config.noise_std, robot_sensor_seed(config.seed, 0)).unwrap();
        let mission = run_mission(&field, &mut sensor, &mission_config, &NullClock).unwrap();

        assert_eq!(fleet.robots.len(), 1);
        assert_eq!(fleet.robots[0], mission);
        assert_eq!(fleet.x_hat.x, mission.x_hat.x);
        assert_eq!(fleet.x_hat.y, mission.x_hat.y);
        assert_eq!(fleet.final_hyper, mission.final_hyper);
    }

    #[test]
    fn voronoi_steps_stay_inside_their_epoch_cells() {
        let field = SyntheticField::four_maxima();
        let region = *field.region();
        let config = small_fleet(PartitionMode::Voronoi, 3);
        let fleet = run_fleet(&field, &config, &NullClock).unwrap();

        assert_eq!(fleet.epochs.len(), config.epochs);
        let m = config.steps_per_epoch;
        for (e, snapshot) in fleet.epochs.iter().enumerate() {
            for (r, log) in fleet.robots.iter().enumerate() {
                if snapshot.degenerate[r] {
                    continue;
                }
                for step in log.steps.iter().skip(e * m).take(m) {
                    assert_eq!(
                        nearest_generator(&snapshot.generators, step.pose.position),
                        r,
                        "epoch {e} robot {r} left its cell"
                    );
                    assert!(region.contains(step.pose.position));
                }
            }
        }

        let per_robot: usize = fleet.robots.iter().map(|l| l.steps.len()).sum();
        assert_eq!(fleet.total_measurements, per_robot);
        assert_eq!(per_robot, 3 * config.epochs * m);
    }

    #[test]
    fn partition_mode_changes_the_trajectories() {
        let field = SyntheticField::four_maxima();
        let voronoi =
            run_fleet(&field, &small_fleet(PartitionMode::Voronoi, 3), &NullClock).unwrap();
        let free = run_fleet(&field, &small_fleet(PartitionMode::None, 3), &NullClock).unwrap();
        assert_ne!(voronoi.robots[0].steps, free.robots[0].steps);
        for snapshot in &free.epochs {
            assert!(snapshot.assignment.is_none());
        }
    }

    #[test]
    fn centroids_are_logged_per_epoch_inside_the_region() {
        let field = SyntheticField::four_maxima();
        let region = *field.region();
        let config = small_fleet(PartitionMode::Voronoi, 3);
        let fleet = run_fleet(&field, &config, &NullClock).unwrap();
        for snapshot in &fleet.epochs {
            let centroids = snapshot.centroids.as_ref().unwrap();
            assert_eq!(centroids.len(), 3);
            for c in centroids.iter().flatten() {
                assert!(region.contains(*c));
            }
        }
    }

    #[test]
    fn rejects_per_step_reoptimization_and_bad_shapes() {
        let field = SyntheticField::four_maxima();
        let mut config = small_fleet(PartitionMode::Voronoi, 2);
        config.strategy = StrategyKind::OptGp;
        assert!(matches!(
            run_fleet(&field, &config, &NullClock),
            Err(MissionError::BadConfig(_))
        ));

        let mut config = small_fleet(PartitionMode::Voronoi, 2);
        config.start_poses.pop();
        assert!(matches!(
            run_fleet(&field, &config, &NullClock),
            Err(MissionError::BadConfig(_))
        ));
    }
}
