//! Evaluation grids over a region.
//!
//! Posterior argmax reporting, field statistics, error metrics, and the
//! Voronoi partition all discretize the region the same way: an inclusive
//! `nx x ny` lattice (both boundary rows/columns included). Linear indices
//! are row-major with x varying fastest, which fixes the scan order used
//! for deterministic tie-breaking.

use alloc::vec::Vec;

use crate::geom::{Point2, Region};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid {
    region: Region,
    nx: usize,
    ny: usize,
}

impl EvalGrid {
    /// Square grid with `resolution` nodes per axis.
    pub fn square(region: Region, resolution: usize) -> Self {
        Self::rect(region, resolution, resolution)
    }

    pub fn rect(region: Region, nx: usize, ny: usize) -> Self {
        assert!(nx >= 2 && ny >= 2, "grid needs at least 2 nodes per axis");
        Self { region, nx, ny }
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_at(&self, ix: usize) -> f64 {
        debug_assert!(ix < self.nx);
        let f = ix as f64 / (self.nx - 1) as f64;
        self.region.x_min + f * self.region.width()
    }

    pub fn y_at(&self, iy: usize) -> f64 {
        debug_assert!(iy < self.ny);
        let f = iy as f64 / (self.ny - 1) as f64;
        self.region.y_min + f * self.region.height()
    }

    pub fn point(&self, index: usize) -> Point2 {
        debug_assert!(index < self.len());
        Point2::new(self.x_at(index % self.nx), self.y_at(index / self.nx))
    }

    /// All nodes in scan order.
    pub fn points(&self) -> Vec<Point2> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Index of the first node (scan order) attaining the maximum of
    /// `values`. `values` must have one entry per node.
    pub fn argmax_index(&self, values: &[f64]) -> usize {
        assert_eq!(values.len(), self.len());
        let mut best = 0;
        for (i, &v) in values.iter().enumerate() {
            if v > values[best] {
                best = i;
            }
        }
        best
    }
}
