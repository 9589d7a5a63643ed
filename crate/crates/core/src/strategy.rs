//! Mission engine: the budgeted receding-horizon loop that ties the GP
//! belief, the UCB planner, and a noisy sensor together, plus the three
//! hyperparameter strategies that differ only in how the kernel evolves
//! as data arrives.
//!
//! A mission alternates planning and moving until the travel budget is
//! spent, then reports the argmax of the posterior mean over the
//! evaluation grid. The returned [`MissionLog`] is a complete record:
//! metrics and budget-checkpoint curves are reconstructed from it after
//! the fact, so the engine itself stays free of evaluation concerns.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::field::{FieldError, Sensor, SpatialField};
use crate::fmath;
use crate::geom::{Point2, Pose, Region};
use crate::gp::{
    optimize_hyperparameters, GpError, GpModel, Hyperparameters, OptimizeOptions, Posterior,
    PosteriorEval,
};
use crate::grid::EvalGrid;
use crate::planner::{beta, plan_next, PlanError, PlanSpace, PlannerConfig};

#[derive(Debug, thiserror::Error)]
pub enum MissionError {
    #[error("gp failure: {0}")]
    Gp(#[from] GpError),
    #[error("sensing failure: {0}")]
    Field(#[from] FieldError),
    #[error("planning failure: {0}")]
    Plan(#[from] PlanError),
    #[error("invalid mission config: {0}")]
    BadConfig(&'static str),
}

/// How the GP hyperparameters evolve over a mission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum StrategyKind {
    /// Kernel fixed at the configured values for the whole mission.
    TrueGp,
    /// Deterministic schedule: the signal amplitude grows and the length
    /// scales shrink logarithmically with the sample count, so early
    /// planning is smooth/exploratory and later planning is local.
    AdaptGp,
    /// Marginal-likelihood refinement after every measurement, warm
    /// started from the previous step's estimate.
    OptGp,
}

/// Schedule value after `t` measurements: amplitude scaled up by
/// `ln t`, length scales divided by it, noise untouched. `t < 2` is
/// clamped to 2 so the multiplier never drops below `ln 2`.
pub fn update_adaptive_hyper(base: &Hyperparameters, t: usize) -> Hyperparameters {
    let g = fmath::ln(t.max(2) as f64);
    Hyperparameters {
        signal_std: base.signal_std * g,
        length_scales: [base.length_scales[0] / g, base.length_scales[1] / g],
        noise_var: base.noise_var,
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MissionConfig {
    /// Total budget `T` in travel-distance units.
    pub budget: f64,
    /// Per-measurement budget surcharge; a step costs `step_length + eta`.
    pub eta: f64,
    pub start_pose: Pose,
    pub strategy: StrategyKind,
    /// TrueGp: the fixed kernel. AdaptGp: the schedule base (sigma_0,
    /// l_0). OptGp: the optimizer's starting point.
    pub initial_hyper: Hyperparameters,
    pub planner: PlannerConfig,
    /// Seed of the planner's rollout stream. The sensor has its own rng.
    pub seed: u64,
    /// Per-step refinement used by [`StrategyKind::OptGp`].
    pub step_opt: OptimizeOptions,
    /// Full optimization settings for the end-of-mission report.
    pub final_opt: OptimizeOptions,
}

impl MissionConfig {
    pub fn new(strategy: StrategyKind, start_pose: Pose, initial_hyper: Hyperparameters) -> Self {
        Self {
            budget: 350.0,
            eta: 0.0,
            start_pose,
            strategy,
            initial_hyper,
            planner: PlannerConfig::default(),
            seed: 0,
            step_opt: OptimizeOptions::warm(30),
            final_opt: OptimizeOptions::full(),
        }
    }

    pub fn validate(&self, region: &Region) -> Result<(), MissionError> {
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return Err(MissionError::BadConfig("budget must be finite and > 0"));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(MissionError::BadConfig("eta must be finite and >= 0"));
        }
        if !region.contains(self.start_pose.position) {
            return Err(MissionError::BadConfig("start pose outside the region"));
        }
        self.initial_hyper.validate()?;
        self.planner.validate()?;
        Ok(())
    }

    /// Cost of one step: travel plus the measurement surcharge.
    pub fn step_cost(&self) -> f64 {
        self.planner.step_length + self.eta
    }
}

/// One executed step. `gp_seconds` is the cumulative GP wall time
/// (posterior queries and likelihood work) up to and including this step.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StepRecord {
    /// 1-based measurement index.
    pub t: usize,
    /// Pose after the move; the measurement was taken at its position.
    pub pose: Pose,
    pub measurement: f64,
    /// Hyperparameters the step was planned with.
    pub hyper: Hyperparameters,
    /// Exploration weight used by the planner this step.
    pub beta: f64,
    pub gp_seconds: f64,
}

/// Complete record of a mission: the configuration it ran under, every
/// step, and the end-of-mission report.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MissionLog {
    pub config: MissionConfig,
    pub steps: Vec<StepRecord>,
    /// True when the robot ran out of feasible moves before the budget.
    pub truncated: bool,
    pub distance_traveled: f64,
    pub measurements: usize,
    /// Hyperparameters in effect before the final full optimization.
    pub pre_report_hyper: Hyperparameters,
    /// Hyperparameters the report posterior was computed with.
    pub final_hyper: Hyperparameters,
    /// Reported maximizer: argmax of the posterior mean over the
    /// evaluation grid (always a grid node).
    pub x_hat: Point2,
    pub gp_seconds_total: f64,
}

impl MissionLog {
    /// Measurement locations in visit order.
    pub fn positions(&self) -> Vec<Point2> {
        self.steps.iter().map(|s| s.pose.position).collect()
    }

    /// (location, value) pairs in visit order.
    pub fn observations(&self) -> Vec<(Point2, f64)> {
        self.steps
            .iter()
            .map(|s| (s.pose.position, s.measurement))
            .collect()
    }
}

/// Posterior adapter that bills each query's wall time to an accumulator.
pub(crate) struct TimedPosterior<'a, C: Clock> {
    eval: PosteriorEval<'a>,
    clock: &'a C,
    pub(crate) seconds: f64,
}

impl<'a, C: Clock> TimedPosterior<'a, C> {
    pub(crate) fn new(model: &'a GpModel, clock: &'a C) -> Self {
        Self {
            eval: PosteriorEval::new(model),
            clock,
            seconds: 0.0,
        }
    }
}

impl<C: Clock> Posterior for TimedPosterior<'_, C> {
    fn mean_std(&mut self, p: Point2) -> (f64, f64) {
        let start = self.clock.now();
        let out = self.eval.mean_std(p);
        self.seconds += self.clock.since(start).as_secs_f64();
        out
    }
}

pub(crate) fn timed<C: Clock, T>(clock: &C, f: impl FnOnce() -> T) -> (T, f64) {
    let start = clock.now();
    let out = f();
    (out, clock.since(start).as_secs_f64())
}

/// Kernel a strategy plans with when `n` measurements are in the model.
/// Pure in `n` for the scheduled strategies; OptGp owns its state via
/// the model's current estimate.
pub(crate) fn planning_hyper(
    strategy: StrategyKind,
    base: &Hyperparameters,
    n: usize,
    current: &Hyperparameters,
) -> Hyperparameters {
    match strategy {
        StrategyKind::TrueGp => *base,
        StrategyKind::AdaptGp => {
            if n == 0 {
                *base
            } else {
                update_adaptive_hyper(base, n)
            }
        }
        StrategyKind::OptGp => *current,
    }
}

/// Rollout travel allowance when `n` steps of `budget` are already
/// spent. Shared by single missions and fleet replicas so the two paths
/// stay bit-identical.
pub(crate) fn remaining_travel(budget: f64, n: usize, step_cost: f64, step_length: f64) -> f64 {
    (budget - n as f64 * step_cost) / step_cost * step_length
}

pub(crate) struct EngineStep {
    pub(crate) pose: Pose,
    pub(crate) measurement: f64,
    pub(crate) hyper: Hyperparameters,
    pub(crate) beta: f64,
    pub(crate) gp_seconds: f64,
}

pub(crate) enum StepOutcome {
    Stepped(EngineStep),
    /// No feasible successor from the current pose.
    Stuck,
}

/// One plan-move-measure-update cycle against an arbitrary plan space.
/// The fleet runs the same cycle with a Voronoi cell in place of the
/// whole region, which is what keeps a single-robot fleet identical to
/// a plain mission.
#[allow(clippy::too_many_arguments)]
pub(crate) fn engine_step<F, S, C>(
    field: &F,
    sensor: &mut Sensor,
    gp: &mut GpModel,
    pose: Pose,
    strategy: StrategyKind,
    base: &Hyperparameters,
    rollout_travel: f64,
    step_opt: &OptimizeOptions,
    planner: &PlannerConfig,
    space: &S,
    clock: &C,
    rng: &mut ChaCha8Rng,
) -> Result<StepOutcome, MissionError>
where
    F: SpatialField + ?Sized,
    S: PlanSpace,
    C: Clock,
{
    let n_before = gp.len();
    let hyper = planning_hyper(strategy, base, n_before, gp.hyper());
    if *gp.hyper() != hyper {
        gp.set_hyperparameters(hyper)?;
    }

    let t = n_before.max(1);
    let mut gp_seconds = 0.0;
    let planned = {
        let mut posterior = TimedPosterior::new(gp, clock);
        let out = plan_next(&mut posterior, pose, rollout_travel, t, planner, space, rng);
        gp_seconds += posterior.seconds;
        out
    };
    let next = match planned {
        Ok(p) => p,
        Err(PlanError::Stuck { .. }) => return Ok(StepOutcome::Stuck),
        Err(e) => return Err(e.into()),
    };

    let y = sensor.measure(field, next.position)?;
    gp.add_observation(next.position, y)?;

    if strategy == StrategyKind::OptGp {
        let init = *gp.hyper();
        let (result, secs) = timed(clock, || optimize_hyperparameters(gp, &init, step_opt));
        gp_seconds += secs;
        if *gp.hyper() != result.hyper {
            gp.set_hyperparameters(result.hyper)?;
        }
    }

    Ok(StepOutcome::Stepped(EngineStep {
        pose: next,
        measurement: y,
        hyper,
        beta: beta(t, planner),
        gp_seconds,
    }))
}

pub(crate) struct FinalReport {
    pub(crate) pre_hyper: Hyperparameters,
    pub(crate) hyper: Hyperparameters,
    pub(crate) x_hat: Point2,
    pub(crate) gp_seconds: f64,
}

/// End-of-mission report, identical for every strategy: bring the
/// kernel to the strategy's current value, run the full optimizer from
/// there, and report the posterior-mean argmax over the grid.
pub(crate) fn final_report<C: Clock>(
    gp: &mut GpModel,
    strategy: StrategyKind,
    base: &Hyperparameters,
    final_opt: &OptimizeOptions,
    planner: &PlannerConfig,
    region: &Region,
    clock: &C,
) -> Result<FinalReport, MissionError> {
    let pre_hyper = planning_hyper(strategy, base, gp.len(), gp.hyper());
    if *gp.hyper() != pre_hyper {
        gp.set_hyperparameters(pre_hyper)?;
    }

    let (result, opt_secs) = timed(clock, || {
        optimize_hyperparameters(gp, &pre_hyper, final_opt)
    });
    if *gp.hyper() != result.hyper {
        gp.set_hyperparameters(result.hyper)?;
    }

    let grid = EvalGrid::square(*region, planner.grid_resolution());
    let (x_hat, argmax_secs) = timed(clock, || {
        let means = gp.predict_mean(&grid.points());
        grid.point(grid.argmax_index(&means))
    });

    Ok(FinalReport {
        pre_hyper,
        hyper: result.hyper,
        x_hat,
        gp_seconds: opt_secs + argmax_secs,
    })
}

/// Run one budgeted mission. The loop plans while another full step
/// still fits in the budget, so `distance + n*eta <= budget` holds by
/// construction (asserted before returning). A robot that runs out of
/// feasible moves ends early with `truncated` set.
pub fn run_mission<F, C>(
    field: &F,
    sensor: &mut Sensor,
    config: &MissionConfig,
    clock: &C,
) -> Result<MissionLog, MissionError>
where
    F: SpatialField + ?Sized,
    C: Clock,
{
    let region = *field.region();
    config.validate(&region)?;

    let mut gp = GpModel::new(config.initial_hyper)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pose = config.start_pose;
    let step_cost = config.step_cost();
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut gp_seconds_total = 0.0;
    let mut truncated = false;

    while (steps.len() as f64 + 1.0) * step_cost <= config.budget {
        let rollout = remaining_travel(
            config.budget,
            steps.len(),
            step_cost,
            config.planner.step_length,
        );
        let outcome = engine_step(
            field,
            sensor,
            &mut gp,
            pose,
            config.strategy,
            &config.initial_hyper,
            rollout,
            &config.step_opt,
            &config.planner,
            &region,
            clock,
            &mut rng,
        )?;
        match outcome {
            StepOutcome::Stuck => {
                truncated = true;
                break;
            }
            StepOutcome::Stepped(step) => {
                pose = step.pose;
                gp_seconds_total += step.gp_seconds;
                steps.push(StepRecord {
                    t: steps.len() + 1,
                    pose,
                    measurement: step.measurement,
                    hyper: step.hyper,
                    beta: step.beta,
                    gp_seconds: gp_seconds_total,
                });
            }
        }
    }

    let n = steps.len();
    let distance_traveled = n as f64 * config.planner.step_length;
    assert!(
        distance_traveled + n as f64 * config.eta <= config.budget,
        "budget invariant violated: {} + {}*{} > {}",
        distance_traveled,
        n,
        config.eta,
        config.budget
    );

    let report = final_report(
        &mut gp,
        config.strategy,
        &config.initial_hyper,
        &config.final_opt,
        &config.planner,
        &region,
        clock,
    )?;
    gp_seconds_total += report.gp_seconds;

    Ok(MissionLog {
        config: config.clone(),
        steps,
        truncated,
        distance_traveled,
        measurements: n,
        pre_report_hyper: report.pre_hyper,
        final_hyper: report.hyper,
        x_hat: report.x_hat,
        gp_seconds_total,
    })
}
