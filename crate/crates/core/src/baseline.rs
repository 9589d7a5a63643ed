//! Boustrophedon (lawnmower) coverage baseline.
//!
//! The baseline robot ignores the field entirely: it sweeps its region
//! in alternating parallel lanes, measuring at fixed travel intervals,
//! and only at the end fits a GP to everything it saw. The report
//! pipeline (full hyperparameter optimization, posterior-mean argmax on
//! the evaluation grid) is exactly the strategy missions' so the
//! resulting [`MissionLog`]s are directly comparable.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::field::{Sensor, SpatialField};
use crate::fmath;
use crate::geom::{Point2, Pose, Region};
use crate::gp::GpModel;
use crate::strategy::{
    final_report, MissionConfig, MissionError, MissionLog, StepRecord, StrategyKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Orientation {
    /// Lanes parallel to the x axis, stacked across the height.
    Horizontal,
    /// Lanes parallel to the y axis, stacked across the width.
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Corner {
    BottomLeft,
    BottomRight,
    TopLeft,
    TopRight,
}

impl Corner {
    fn is_left(self) -> bool {
        matches!(self, Corner::BottomLeft | Corner::TopLeft)
    }

    fn is_bottom(self) -> bool {
        matches!(self, Corner::BottomLeft | Corner::BottomRight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BoustrophedonPlan {
    pub sub_region: Region,
    /// Requested gap between adjacent lanes. Lanes are spread evenly
    /// edge to edge, so the realized gap never exceeds this.
    pub lane_spacing: f64,
    pub orientation: Orientation,
    pub start_corner: Corner,
}

impl BoustrophedonPlan {
    pub fn new(
        sub_region: Region,
        lane_spacing: f64,
        orientation: Orientation,
        start_corner: Corner,
    ) -> Result<Self, MissionError> {
        let plan = Self {
            sub_region,
            lane_spacing,
            orientation,
            start_corner,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), MissionError> {
        if !(self.lane_spacing.is_finite() && self.lane_spacing > 0.0) {
            return Err(MissionError::BadConfig(
                "lane spacing must be finite and > 0",
            ));
        }
        let max = self.sub_region.width().min(self.sub_region.height());
        if self.lane_spacing > max {
            return Err(MissionError::BadConfig(
                "lane spacing exceeds the smaller region extent",
            ));
        }
        Ok(())
    }

    /// Plan with random orientation and start corner, the baseline's
    /// only source of variation across trials.
    pub fn randomized<R: Rng>(
        sub_region: Region,
        lane_spacing: f64,
        rng: &mut R,
    ) -> Result<Self, MissionError> {
        let orientation = if rng.random_range(0..2u8) == 0 {
            Orientation::Horizontal
        } else {
            Orientation::Vertical
        };
        let start_corner = match rng.random_range(0..4u8) {
            0 => Corner::BottomLeft,
            1 => Corner::BottomRight,
            2 => Corner::TopLeft,
            _ => Corner::TopRight,
        };
        Self::new(sub_region, lane_spacing, orientation, start_corner)
    }
}

/// Evenly spaced lane coordinates across `[lo, hi]`, both edges
/// included; a single centered lane when the spacing covers the span.
fn lane_positions(lo: f64, hi: f64, spacing: f64) -> Vec<f64> {
    let span = hi - lo;
    if spacing >= span {
        return vec![0.5 * (lo + hi)];
    }
    let gaps = fmath::ceil(span / spacing) as usize;
    let mut out = Vec::with_capacity(gaps + 1);
    for i in 0..=gaps {
        out.push(lo + span * i as f64 / gaps as f64);
    }
    out
}

/// Alternating-direction sweep waypoints. Consecutive waypoints are
/// axis-aligned: two per lane plus the implicit transition segments
/// shared between adjacent lanes.
pub fn bst_waypoints(plan: &BoustrophedonPlan) -> Vec<Point2> {
    let r = plan.sub_region;
    let (mut lanes, ends) = match plan.orientation {
        Orientation::Horizontal => (
            lane_positions(r.y_min, r.y_max, plan.lane_spacing),
            [r.x_min, r.x_max],
        ),
        Orientation::Vertical => (
            lane_positions(r.x_min, r.x_max, plan.lane_spacing),
            [r.y_min, r.y_max],
        ),
    };
    let from_low_side = match plan.orientation {
        Orientation::Horizontal => plan.start_corner.is_bottom(),
        Orientation::Vertical => plan.start_corner.is_left(),
    };
    if !from_low_side {
        lanes.reverse();
    }
    let from_low_end = match plan.orientation {
        Orientation::Horizontal => plan.start_corner.is_left(),
        Orientation::Vertical => plan.start_corner.is_bottom(),
    };

    let mut out = Vec::with_capacity(2 * lanes.len());
    for (i, &lane) in lanes.iter().enumerate() {
        let forward = (i % 2 == 0) == from_low_end;
        let [a, b] = if forward {
            [ends[0], ends[1]]
        } else {
            [ends[1], ends[0]]
        };
        match plan.orientation {
            Orientation::Horizontal => {
                out.push(Point2::new(a, lane));
                out.push(Point2::new(b, lane));
            }
            Orientation::Vertical => {
                out.push(Point2::new(lane, a));
                out.push(Point2::new(lane, b));
            }
        }
    }
    out
}

/// Total arc length of a waypoint polyline.
pub fn polyline_length(waypoints: &[Point2]) -> f64 {
    waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Split `region` into `k` equal-width vertical strips for a fleet of
/// lawnmower robots.
pub fn vertical_strips(region: &Region, k: usize) -> Vec<Region> {
    assert!(k > 0, "strip count must be positive");
    let w = region.width() / k as f64;
    (0..k)
        .map(|i| {
            let x_lo = region.x_min + w * i as f64;
            let x_hi = if i + 1 == k {
                region.x_max
            } else {
                region.x_min + w * (i + 1) as f64
            };
            Region::new(x_lo, x_hi, region.y_min, region.y_max)
                .expect("strip of a valid region is valid")
        })
        .collect()
}

/// Poses at every multiple of `step` of arc length along the polyline,
/// headed along the segment being walked. When the sweep finishes with
/// distance allowance left it retraces the polyline in reverse (and
/// back again), so the robot keeps measuring until `max_distance` is
/// used while never leaving the swept lanes.
fn walk_measurements(waypoints: &[Point2], step: f64, max_distance: f64) -> Vec<Pose> {
    let mut out = Vec::new();
    if polyline_length(waypoints) == 0.0 {
        return out;
    }
    let mut walked = 0.0;
    let mut next_target = step;
    let mut forward = true;
    'passes: loop {
        let mut idx = 0;
        while idx + 1 < waypoints.len() {
            let (a, b) = if forward {
                (waypoints[idx], waypoints[idx + 1])
            } else {
                let n = waypoints.len();
                (waypoints[n - 1 - idx], waypoints[n - 2 - idx])
            };
            idx += 1;
            let len = a.distance(b);
            if len == 0.0 {
                continue;
            }
            let heading = fmath::atan2(b.y - a.y, b.x - a.x);
            while next_target <= walked + len {
                if next_target > max_distance {
                    break 'passes;
                }
                // Clamped so accumulated arc-length rounding can never
                // extrapolate past the segment (and out of the region).
                let frac = ((next_target - walked) / len).clamp(0.0, 1.0);
                let p = Point2::new(a.x + frac * (b.x - a.x), a.y + frac * (b.y - a.y));
                out.push(Pose::new(p, heading));
                next_target += step;
            }
            walked += len;
        }
        if next_target > max_distance {
            break;
        }
        forward = !forward;
    }
    out
}

/// Sweep the plan at unit speed, measuring every `step_length` of
/// travel; a sweep shorter than the budget is retraced back and forth
/// so the whole budget is spent inside the lanes. Uses `config` for
/// the budget, surcharge, kernel, and report settings; the strategy
/// must be [`StrategyKind::TrueGp`] since a coverage sweep has no
/// in-mission hyperparameter schedule.
pub fn run_bst_mission<F, C>(
    field: &F,
    sensor: &mut Sensor,
    plan: &BoustrophedonPlan,
    config: &MissionConfig,
    clock: &C,
) -> Result<MissionLog, MissionError>
where
    F: SpatialField + ?Sized,
    C: Clock,
{
    plan.validate()?;
    if config.strategy != StrategyKind::TrueGp {
        return Err(MissionError::BadConfig(
            "boustrophedon missions use the fixed-kernel strategy",
        ));
    }
    let region = *field.region();
    for corner in [
        Point2::new(plan.sub_region.x_min, plan.sub_region.y_min),
        Point2::new(plan.sub_region.x_max, plan.sub_region.y_max),
    ] {
        if !region.contains(corner) {
            return Err(MissionError::BadConfig("plan region exceeds the field"));
        }
    }
    if !(config.budget.is_finite() && config.budget > 0.0) {
        return Err(MissionError::BadConfig("budget must be finite and > 0"));
    }
    if !(config.eta.is_finite() && config.eta >= 0.0) {
        return Err(MissionError::BadConfig("eta must be finite and >= 0"));
    }
    config.initial_hyper.validate()?;
    config.planner.validate()?;

    let step_cost = config.step_cost();
    let mut affordable = 0usize;
    while (affordable as f64 + 1.0) * step_cost <= config.budget {
        affordable += 1;
    }
    let max_travel = affordable as f64 * config.planner.step_length;

    let waypoints = bst_waypoints(plan);
    let poses = walk_measurements(&waypoints, config.planner.step_length, max_travel);

    let mut steps: Vec<StepRecord> = Vec::new();
    let mut observations: Vec<(Point2, f64)> = Vec::new();
    for (i, pose) in poses.iter().take(affordable).enumerate() {
        let y = sensor.measure(field, pose.position)?;
        observations.push((pose.position, y));
        steps.push(StepRecord {
            t: i + 1,
            pose: *pose,
            measurement: y,
            hyper: config.initial_hyper,
            beta: 0.0,
            gp_seconds: 0.0,
        });
    }

    let n = steps.len();
    let distance_traveled = n as f64 * config.planner.step_length;
    assert!(
        distance_traveled + n as f64 * config.eta <= config.budget,
        "budget invariant violated"
    );

    let mut gp = GpModel::with_data(
        config.initial_hyper,
        observations.iter().map(|o| o.0).collect(),
        observations.iter().map(|o| o.1).collect(),
    )?;
    let report = final_report(
        &mut gp,
        StrategyKind::TrueGp,
        &config.initial_hyper,
        &config.final_opt,
        &config.planner,
        &region,
        clock,
    )?;

    let start_pose = match (waypoints.first(), waypoints.get(1)) {
        (Some(&a), Some(&b)) => Pose::new(a, fmath::atan2(b.y - a.y, b.x - a.x)),
        (Some(&a), None) => Pose::new(a, 0.0),
        _ => config.start_pose,
    };
    let mut echo = config.clone();
    echo.start_pose = start_pose;

    Ok(MissionLog {
        config: echo,
        steps,
        truncated: n < affordable,
        distance_traveled,
        measurements: n,
        pre_report_hyper: report.pre_hyper,
        final_hyper: report.hyper,
        x_hat: report.x_hat,
        gp_seconds_total: report.gp_seconds,
    })
}
