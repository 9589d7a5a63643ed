//! Planar points, axis-aligned regions, and robot poses.

use crate::fmath;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Point in the plane. Coordinates are in field units (degrees for the
/// geographic datasets, but nothing here assumes that).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        fmath::sqrt(dx * dx + dy * dy)
    }

    /// Squared distance; cheaper when only comparisons are needed.
    pub fn distance_sq(&self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Self { x: v[0], y: v[1] }
    }
}

/// Robot pose: position plus heading in radians, measured
/// counterclockwise from the +x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Pose {
    pub position: Point2,
    pub heading: f64,
}

impl Pose {
    pub const fn new(position: Point2, heading: f64) -> Self {
        Self { position, heading }
    }

    /// Pose at `position` facing the centroid of `region`. Falls back to
    /// heading 0 when the position is the centroid itself.
    pub fn facing_center(position: Point2, region: &Region) -> Self {
        let c = region.center();
        let dy = c.y - position.y;
        let dx = c.x - position.x;
        let heading = if dx == 0.0 && dy == 0.0 {
            0.0
        } else {
            fmath::atan2(dy, dx)
        };
        Self { position, heading }
    }

    /// Pose reached by driving `step` units along heading
    /// `self.heading + offset`. The new heading is the travel direction.
    pub fn advance(&self, offset: f64, step: f64) -> Pose {
        let heading = self.heading + offset;
        Pose {
            position: Point2::new(
                self.position.x + step * fmath::cos(heading),
                self.position.y + step * fmath::sin(heading),
            ),
            heading,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegionError {
    #[error("region bounds must satisfy min < max on both axes")]
    EmptyExtent,
    #[error("region bounds must be finite")]
    NonFinite,
}

/// Axis-aligned rectangular survey region.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, RegionError> {
        let r = Self {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(RegionError::NonFinite);
        }
        if !(x_min < x_max && y_min < y_max) {
            return Err(RegionError::EmptyExtent);
        }
        Ok(r)
    }

    /// Inclusive containment on all edges.
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn diagonal(&self) -> f64 {
        let w = self.width();
        let h = self.height();
        fmath::sqrt(w * w + h * h)
    }
}
