//! Experiment configuration: a versioned JSON schema with strict
//! validation.
//!
//! A config describes one study: a field, a set of strategies, a seed
//! list, and the mission shape (single robot or fleet). Unknown keys
//! are rejected so typos cannot silently fall back to defaults, and
//! [`ExperimentConfig::validate`] reports every problem at once rather
//! than stopping at the first.
//!
//! Schema (version 1), optional keys marked `?`:
//!
//! ```json
//! {
//!   "version": 1,
//!   "name": "synthetic_single",
//!   "field": "synthetic" | {"dataset": "data/chlorophyll.csv"},
//!   "strategies": ["BST", "TrueGP", "AdaptGP", "OptGP"],
//!   "seeds": [0, 1, 2],
//!   "budget": 350.0,
//!   "eta"?: 0.0,
//!   "noise_percent": 5.0,
//!   "start": [[-149.0, 16.0]],
//!   "fleet"?: {"robots": 4, "epochs": 10, "steps_per_epoch": 10,
//!              "partition": "voronoi" | "none"},
//!   "hyper": {"signal_std": 0.251, "length_scales": [5.04, 5.04],
//!             "adapt_signal_std"?: 1.0, "adapt_length_scales"?: [l, l],
//!             "opt_init_signal_std"?: 1.0, "opt_init_length_scales"?: [l, l]},
//!   "planner"?: {"num_primitives"?: 5, "heading_fan"?: 0.7853981633974483,
//!                "step_length"?: 1.0, "iteration_cap"?: 50,
//!                "delta"?: 0.1, "grid_size"?: 16900},
//!   "bst"?: {"lane_spacing": 1.26},
//!   "detection_radius"?: 2.0,
//!   "curve_every"?: 10.0,
//!   "output_dir": "runs/synthetic_single"
//! }
//! ```
//!
//! `noise_percent` sets the sensor noise standard deviation as a
//! percentage of the field's value range, so the same number means the
//! same relative corruption on every field. `budget` is the travel
//! budget per robot; for fleets it must equal
//! `epochs * steps_per_epoch * (step_length + eta)` so the two ways of
//! stating the mission length cannot disagree.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use hotspot_core::planner::PlannerConfig;
use hotspot_core::strategy::StrategyKind;
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid experiment config:\n{}", format_diagnostics(.0))]
    Invalid(Vec<String>),
}

fn format_diagnostics(lines: &[String]) -> String {
    lines
        .iter()
        .map(|l| format!("  - {l}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Ground-truth field to run against: the built-in four-maxima
/// benchmark or a gridded dataset loaded from a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSpec {
    Synthetic,
    Dataset(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyName {
    #[serde(rename = "BST")]
    Bst,
    #[serde(rename = "TrueGP")]
    TrueGp,
    #[serde(rename = "AdaptGP")]
    AdaptGp,
    #[serde(rename = "OptGP")]
    OptGp,
}

impl StrategyName {
    /// Strategy of the planning missions; the coverage baseline reports
    /// through the fixed kernel.
    pub fn kind(self) -> StrategyKind {
        match self {
            StrategyName::Bst | StrategyName::TrueGp => StrategyKind::TrueGp,
            StrategyName::AdaptGp => StrategyKind::AdaptGp,
            StrategyName::OptGp => StrategyKind::OptGp,
        }
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyName::Bst => "BST",
            StrategyName::TrueGp => "TrueGP",
            StrategyName::AdaptGp => "AdaptGP",
            StrategyName::OptGp => "OptGP",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionSpec {
    Voronoi,
    None,
}

/// Fleet shape. The per-robot budget is implied by
/// `epochs * steps_per_epoch` and the step cost; `partition` selects
/// the coordination mode under test. The coverage baseline sweeps one
/// fixed vertical strip per robot, so `partition` does not affect it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetSpec {
    pub robots: usize,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub partition: PartitionSpec,
}

/// Kernel settings. `signal_std`/`length_scales` are the known kernel
/// used by the fixed-kernel strategy and the coverage baseline. The
/// scheduled strategy starts from the `adapt_*` base (length scales
/// default to the region diagonal, i.e. maximally smooth); the
/// re-optimizing strategy starts from `opt_init_*` (length scales
/// default to a quarter of the diagonal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperSpec {
    pub signal_std: f64,
    pub length_scales: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapt_signal_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapt_length_scales: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt_init_signal_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt_init_length_scales: Option<[f64; 2]>,
}

/// Planner overrides; unset keys keep the library defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_primitives: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading_fan: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
}

impl PlannerSpec {
    pub fn resolve(&self) -> PlannerConfig {
        let d = PlannerConfig::default();
        PlannerConfig {
            num_primitives: self.num_primitives.unwrap_or(d.num_primitives),
            heading_fan: self.heading_fan.unwrap_or(d.heading_fan),
            step_length: self.step_length.unwrap_or(d.step_length),
            iteration_cap: self.iteration_cap.unwrap_or(d.iteration_cap),
            delta: self.delta.unwrap_or(d.delta),
            grid_size: self.grid_size.unwrap_or(d.grid_size),
        }
    }
}

/// Coverage-baseline settings. The lane spacing defaults to a quarter
/// of the mean kernel length scale: dense enough that a completed sweep
/// resolves every hotspot, sparse enough that the budget decides how
/// much of the region gets covered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BstSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane_spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    /// Run label; it keys the rows of `summary.csv` and the columns of
    /// comparison tables.
    pub name: String,
    pub field: FieldSpec,
    pub strategies: Vec<StrategyName>,
    pub seeds: Vec<u64>,
    /// Travel budget per robot, in step-length units.
    pub budget: f64,
    /// Per-measurement budget surcharge.
    #[serde(default)]
    pub eta: f64,
    /// Sensor noise standard deviation as a percentage of the field's
    /// value range.
    pub noise_percent: f64,
    /// Start positions: one entry for single-robot runs, one per robot
    /// for fleets. Headings face the region center.
    pub start: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fleet: Option<FleetSpec>,
    pub hyper: HyperSpec,
    #[serde(default)]
    pub planner: PlannerSpec,
    #[serde(default)]
    pub bst: BstSpec,
    #[serde(default = "default_detection_radius")]
    pub detection_radius: f64,
    /// Budget spacing of the `curves.csv` checkpoints.
    #[serde(default = "default_curve_every")]
    pub curve_every: f64,
    pub output_dir: PathBuf,
}

fn default_detection_radius() -> f64 {
    hotspot_core::metrics::DEFAULT_DETECTION_RADIUS
}

fn default_curve_every() -> f64 {
    10.0
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: Self = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Checks everything that does not require the field to be loaded;
    /// start positions are bounds-checked against the region at run
    /// time. All diagnostics are collected before failing.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut bad = Vec::new();
        if self.version != CONFIG_VERSION {
            bad.push(format!(
                "version {} is not supported (this build reads version {CONFIG_VERSION})",
                self.version
            ));
        }
        if self.name.is_empty() {
            bad.push("name must be non-empty".into());
        }
        if self.strategies.is_empty() {
            bad.push("strategies must list at least one strategy".into());
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(s) {
                bad.push(format!("strategy {s} is listed more than once"));
            }
        }
        if self.seeds.is_empty() {
            bad.push("seeds must list at least one seed".into());
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                bad.push(format!("seed {s} is listed more than once"));
            }
        }
        if !(self.budget.is_finite() && self.budget > 0.0) {
            bad.push(format!(
                "budget must be finite and > 0 (got {})",
                self.budget
            ));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            bad.push(format!("eta must be finite and >= 0 (got {})", self.eta));
        }
        if !(self.noise_percent.is_finite() && self.noise_percent >= 0.0) {
            bad.push(format!(
                "noise_percent must be finite and >= 0 (got {})",
                self.noise_percent
            ));
        }
        let robots = self.fleet.map_or(1, |f| f.robots);
        if self.start.len() != robots {
            bad.push(format!(
                "start must list exactly {robots} position(s), one per robot (got {})",
                self.start.len()
            ));
        }
        if let Some(p) = self
            .start
            .iter()
            .find(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            bad.push(format!("start position ({}, {}) is not finite", p[0], p[1]));
        }

        let planner = self.planner.resolve();
        if let Err(e) = planner.validate() {
            bad.push(e.to_string());
        }

        if let Some(fleet) = &self.fleet {
            if fleet.robots == 0 {
                bad.push("fleet.robots must be >= 1".into());
            }
            if fleet.epochs == 0 {
                bad.push("fleet.epochs must be >= 1".into());
            }
            if fleet.steps_per_epoch == 0 {
                bad.push("fleet.steps_per_epoch must be >= 1".into());
            }
            if self.strategies.contains(&StrategyName::OptGp) {
                bad.push(
                    "OptGP is single-robot only: replicas re-optimizing per step would \
                     diverge between surfacings"
                        .into(),
                );
            }
            let mission_length =
                (fleet.epochs * fleet.steps_per_epoch) as f64 * (planner.step_length + self.eta);
            if fleet.robots > 0
                && fleet.epochs > 0
                && fleet.steps_per_epoch > 0
                && (self.budget - mission_length).abs() > 1e-9
            {
                bad.push(format!(
                    "budget {} does not match the fleet mission length \
                     epochs*steps_per_epoch*(step_length+eta) = {mission_length}",
                    self.budget
                ));
            }
        }

        check_positive(&mut bad, "hyper.signal_std", self.hyper.signal_std);
        check_lengths(&mut bad, "hyper.length_scales", self.hyper.length_scales);
        if let Some(v) = self.hyper.adapt_signal_std {
            check_positive(&mut bad, "hyper.adapt_signal_std", v);
        }
        if let Some(l) = self.hyper.adapt_length_scales {
            check_lengths(&mut bad, "hyper.adapt_length_scales", l);
        }
        if let Some(v) = self.hyper.opt_init_signal_std {
            check_positive(&mut bad, "hyper.opt_init_signal_std", v);
        }
        if let Some(l) = self.hyper.opt_init_length_scales {
            check_lengths(&mut bad, "hyper.opt_init_length_scales", l);
        }
        if let Some(s) = self.bst.lane_spacing {
            if !(s.is_finite() && s > 0.0) {
                bad.push(format!("bst.lane_spacing must be finite and > 0 (got {s})"));
            }
        }
        if !(self.detection_radius.is_finite() && self.detection_radius > 0.0) {
            bad.push(format!(
                "detection_radius must be finite and > 0 (got {})",
                self.detection_radius
            ));
        }
        if !(self.curve_every.is_finite() && self.curve_every > 0.0) {
            bad.push(format!(
                "curve_every must be finite and > 0 (got {})",
                self.curve_every
            ));
        }
        if self.output_dir.as_os_str().is_empty() {
            bad.push("output_dir must be non-empty".into());
        }

        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(bad))
        }
    }

    /// Lane spacing of the coverage baseline after defaulting.
    pub fn lane_spacing(&self) -> f64 {
        self.bst.lane_spacing.unwrap_or_else(|| {
            0.25 * 0.5 * (self.hyper.length_scales[0] + self.hyper.length_scales[1])
        })
    }
}

fn check_positive(bad: &mut Vec<String>, name: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        bad.push(format!("{name} must be finite and > 0 (got {v})"));
    }
}

fn check_lengths(bad: &mut Vec<String>, name: &str, l: [f64; 2]) {
    if l.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        bad.push(format!(
            "{name} must be finite and > 0 (got [{}, {}])",
            l[0], l[1]
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> serde_json::Value {
        serde_json::json!({
            "version": 1,
            "name": "t",
            "field": "synthetic",
            "strategies": ["BST", "TrueGP"],
            "seeds": [0, 1],
            "budget": 30.0,
            "noise_percent": 5.0,
            "start": [[-149.0, 16.0]],
            "hyper": {"signal_std": 0.251, "length_scales": [5.04, 5.04]},
            "output_dir": "out"
        })
    }

    fn parse(v: serde_json::Value) -> Result<ExperimentConfig, serde_json::Error> {
        serde_json::from_value(v)
    }

    #[test]
    fn minimal_config_parses_and_validates() {
        let cfg = parse(minimal_json()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.eta, 0.0);
        assert_eq!(cfg.detection_radius, 2.0);
        assert_eq!(cfg.curve_every, 10.0);
        assert_eq!(cfg.planner.resolve(), PlannerConfig::default());
        assert!((cfg.lane_spacing() - 1.26).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v = minimal_json();
        v["lane_spcing"] = serde_json::json!(2.0);
        let err = parse(v).unwrap_err().to_string();
        assert!(err.contains("lane_spcing"), "{err}");
    }

    #[test]
    fn unsupported_version_is_rejected() {
        let mut v = minimal_json();
        v["version"] = serde_json::json!(2);
        let err = parse(v).unwrap().validate().unwrap_err().to_string();
        assert!(err.contains("version 2"), "{err}");
    }

    #[test]
    fn all_diagnostics_are_collected() {
        let mut v = minimal_json();
        v["budget"] = serde_json::json!(-1.0);
        v["seeds"] = serde_json::json!([3, 3]);
        v["noise_percent"] = serde_json::json!(-5.0);
        let err = parse(v).unwrap().validate().unwrap_err().to_string();
        assert!(err.contains("budget"), "{err}");
        assert!(err.contains("seed 3"), "{err}");
        assert!(err.contains("noise_percent"), "{err}");
    }

    #[test]
    fn fleet_budget_must_match_the_epoch_schedule() {
        let mut v = minimal_json();
        v["strategies"] = serde_json::json!(["TrueGP"]);
        v["fleet"] = serde_json::json!(
            {"robots": 2, "epochs": 3, "steps_per_epoch": 4, "partition": "voronoi"}
        );
        v["start"] = serde_json::json!([[-149.0, 16.0], [-147.0, 17.0]]);
        let cfg = parse(v.clone()).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("mission length"), "{err}");

        v["budget"] = serde_json::json!(12.0);
        parse(v).unwrap().validate().unwrap();
    }

    #[test]
    fn fleets_reject_the_reoptimizing_strategy_and_bad_start_counts() {
        let mut v = minimal_json();
        v["strategies"] = serde_json::json!(["OptGP"]);
        v["fleet"] = serde_json::json!(
            {"robots": 2, "epochs": 3, "steps_per_epoch": 4, "partition": "none"}
        );
        v["budget"] = serde_json::json!(12.0);
        let err = parse(v).unwrap().validate().unwrap_err().to_string();
        assert!(err.contains("OptGP"), "{err}");
        assert!(err.contains("start must list exactly 2"), "{err}");
    }

    #[test]
    fn field_spec_roundtrips_both_forms() {
        let s: FieldSpec = serde_json::from_str("\"synthetic\"").unwrap();
        assert_eq!(s, FieldSpec::Synthetic);
        let d: FieldSpec = serde_json::from_str("{\"dataset\": \"data/c.csv\"}").unwrap();
        assert_eq!(d, FieldSpec::Dataset(PathBuf::from("data/c.csv")));
        assert_eq!(serde_json::to_string(&s).unwrap(), "\"synthetic\"");
    }

    #[test]
    fn load_reports_parse_errors_with_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.json");
        std::fs::write(&path, "{\"version\": 1,}").unwrap();
        let err = ExperimentConfig::load(&path).unwrap_err().to_string();
        assert!(err.contains("broken.json"), "{err}");
    }
}
