//! Scalar environmental fields and the noisy point sensor.
//!
//! Two field families are provided: an analytic multi-bump benchmark
//! ([`SyntheticField`]) and a radial-basis interpolant over gridded
//! measurements ([`GriddedField`], e.g. satellite chlorophyll products).
//! Both are queried through [`SpatialField`], so planners and metrics
//! never care which one they are driving.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fmath;
use crate::geom::{Point2, Region, RegionError};
use crate::grid::EvalGrid;
use crate::linalg::PackedLower;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("query ({x}, {y}) is outside the survey region")]
    OutOfBounds { x: f64, y: f64 },
    #[error("grid axes must be strictly increasing with at least 2 nodes per axis")]
    BadAxes,
    #[error("value array has {got} entries, expected {nx}x{ny}")]
    BadShape { got: usize, nx: usize, ny: usize },
    #[error("non-finite grid value at node index {index}")]
    NonFiniteValue { index: usize },
    #[error("radial-basis interpolation system is numerically singular")]
    InterpolationSingular,
    #[error(
        "bumps must have positive widths, heights in (0, 1] with exactly one height-1 peak, \
         and centers inside the region"
    )]
    BadBumps,
    #[error("sensor noise must be finite and >= 0, got {0}")]
    BadNoise(f64),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// A scalar field over a rectangular survey region.
pub trait SpatialField {
    fn region(&self) -> &Region;

    /// Field value at `p`. Must be defined everywhere inside the region;
    /// behavior outside is implementation-specific (bounds enforcement is
    /// the sensor's job).
    fn value(&self, p: Point2) -> f64;

    /// Nominal hotspot locations, when the field declares them
    /// (detection-time metrics need ground truth).
    fn hotspots(&self) -> &[Point2] {
        &[]
    }

    /// Analytically known global maximum, if any.
    fn known_maximum(&self) -> Option<(Point2, f64)> {
        None
    }
}

impl<F: SpatialField + ?Sized> SpatialField for &F {
    fn region(&self) -> &Region {
        (**self).region()
    }
    fn value(&self, p: Point2) -> f64 {
        (**self).value(p)
    }
    fn hotspots(&self) -> &[Point2] {
        (**self).hotspots()
    }
    fn known_maximum(&self) -> Option<(Point2, f64)> {
        (**self).known_maximum()
    }
}

#[cfg(feature = "std")]
impl<F: SpatialField + ?Sized> SpatialField for alloc::boxed::Box<F> {
    fn region(&self) -> &Region {
        (**self).region()
    }
    fn value(&self, p: Point2) -> f64 {
        (**self).value(p)
    }
    fn hotspots(&self) -> &[Point2] {
        (**self).hotspots()
    }
    fn known_maximum(&self) -> Option<(Point2, f64)> {
        (**self).known_maximum()
    }
}

/// Isotropic Gaussian intensity bump.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bump {
    pub center: Point2,
    pub height: f64,
    pub width: f64,
}

impl Bump {
    pub const fn new(center: Point2, height: f64, width: f64) -> Self {
        Self {
            center,
            height,
            width,
        }
    }

    #[inline]
    fn eval(&self, p: Point2) -> f64 {
        let d2 = self.center.distance_sq(p);
        self.height * fmath::exp(-d2 / (2.0 * self.width * self.width))
    }
}

/// Sum of Gaussian bumps clipped to `[0, 1]`.
///
/// Exactly one bump has unit height, so the clipped sum attains 1.0 at
/// that bump's center and the analytic global maximum is known. The
/// remaining bumps are secondary hotspots: local maxima of the summed
/// surface that sit within a fraction of a length unit of their centers.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticField {
    region: Region,
    bumps: Vec<Bump>,
    centers: Vec<Point2>,
    global: Point2,
}

impl SyntheticField {
    pub fn new(region: Region, bumps: Vec<Bump>) -> Result<Self, FieldError> {
        if bumps.is_empty() {
            return Err(FieldError::BadBumps);
        }
        let mut global = None;
        for b in &bumps {
            let ok = b.width.is_finite()
                && b.width > 0.0
                && b.height.is_finite()
                && b.height > 0.0
                && b.height <= 1.0
                && region.contains(b.center);
            if !ok {
                return Err(FieldError::BadBumps);
            }
            if b.height == 1.0 {
                if global.is_some() {
                    return Err(FieldError::BadBumps);
                }
                global = Some(b.center);
            }
        }
        let global = global.ok_or(FieldError::BadBumps)?;
        let centers = bumps.iter().map(|b| b.center).collect();
        Ok(Self {
            region,
            bumps,
            centers,
            global,
        })
    }

    /// The standard benchmark field: one dominant bloom and three
    /// secondary hotspots over a 26 x 26 degree Pacific patch.
    pub fn four_maxima() -> Self {
        let region = Region::new(-155.5, -129.5, 9.0, 35.0).expect("static bounds");
        let bumps = vec![
            Bump::new(Point2::new(-135.6, 29.0), 1.0, 4.5),
            Bump::new(Point2::new(-148.0, 15.0), 0.7, 4.0),
            Bump::new(Point2::new(-142.0, 21.0), 0.6, 3.3),
            Bump::new(Point2::new(-133.0, 13.0), 0.65, 3.4),
        ];
        Self::new(region, bumps).expect("static bump set")
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }
}

impl SpatialField for SyntheticField {
    fn region(&self) -> &Region {
        &self.region
    }

    fn value(&self, p: Point2) -> f64 {
        let mut s = 0.0;
        for b in &self.bumps {
            s += b.eval(p);
        }
        s.min(1.0)
    }

    fn hotspots(&self) -> &[Point2] {
        &self.centers
    }

    fn known_maximum(&self) -> Option<(Point2, f64)> {
        Some((self.global, 1.0))
    }
}

/// Gaussian radial-basis interpolant through every node of a rectilinear
/// grid of measurements. The basis length scale equals the mean grid
/// spacing; the basis expansion models deviations from the mean node
/// value, so constant data reproduces exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedField {
    region: Region,
    lon_axis: Vec<f64>,
    lat_axis: Vec<f64>,
    values: Vec<f64>,
    nodes: Vec<Point2>,
    weights: Vec<f64>,
    offset: f64,
    shape: f64,
}

impl GriddedField {
    /// Builds the interpolant from axis coordinates and node values in
    /// row-major order (longitude fastest).
    pub fn from_grid(
        lon_axis: Vec<f64>,
        lat_axis: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, FieldError> {
        check_axis(&lon_axis)?;
        check_axis(&lat_axis)?;
        let (nx, ny) = (lon_axis.len(), lat_axis.len());
        if values.len() != nx * ny {
            return Err(FieldError::BadShape {
                got: values.len(),
                nx,
                ny,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFiniteValue { index });
        }
        let region = Region::new(lon_axis[0], lon_axis[nx - 1], lat_axis[0], lat_axis[ny - 1])?;
        let shape = 0.5 * (mean_step(&lon_axis) + mean_step(&lat_axis));

        let mut nodes = Vec::with_capacity(nx * ny);
        for &lat in &lat_axis {
            for &lon in &lon_axis {
                nodes.push(Point2::new(lon, lat));
            }
        }
        let offset = values.iter().sum::<f64>() / values.len() as f64;
        let residuals: Vec<f64> = values.iter().map(|v| v - offset).collect();
        let weights = solve_rbf_weights(&nodes, &residuals, shape)?;
        Ok(Self {
            region,
            lon_axis,
            lat_axis,
            values,
            nodes,
            weights,
            offset,
            shape,
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn lon_axis(&self) -> &[f64] {
        &self.lon_axis
    }

    pub fn lat_axis(&self) -> &[f64] {
        &self.lat_axis
    }

    /// Stored node values, row-major with longitude fastest.
    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    /// Largest stored node value and its location (first in scan order on
    /// ties).
    pub fn node_max(&self) -> (Point2, f64) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (self.nodes[best], self.values[best])
    }
}

fn check_axis(axis: &[f64]) -> Result<(), FieldError> {
    if axis.len() < 2 || axis.iter().any(|v| !v.is_finite()) {
        return Err(FieldError::BadAxes);
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FieldError::BadAxes);
    }
    Ok(())
}

fn mean_step(axis: &[f64]) -> f64 {
    (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
}

fn solve_rbf_weights(nodes: &[Point2], values: &[f64], shape: f64) -> Result<Vec<f64>, FieldError> {
    let n = nodes.len();
    let inv2s2 = 1.0 / (2.0 * shape * shape);
    let build = |extra_diag: f64| {
        let mut m = PackedLower::zeros(n);
        for i in 0..n {
            let row = m.row_mut(i);
            for (j, rj) in row.iter_mut().enumerate().take(i) {
                *rj = fmath::exp(-nodes[i].distance_sq(nodes[j]) * inv2s2);
            }
            row[i] = 1.0 + extra_diag;
        }
        m
    };
    // The Gaussian collocation matrix is SPD in exact arithmetic; a tiny
    // ridge rescues borderline factorizations without visibly moving the
    // interpolant at the nodes.
    for extra in [0.0, 1e-12, 1e-10, 1e-8] {
        let mut m = build(extra);
        if m.cholesky_in_place().is_ok() {
            let mut w = values.to_vec();
            m.solve(&mut w);
            return Ok(w);
        }
    }
    Err(FieldError::InterpolationSingular)
}

impl SpatialField for GriddedField {
    fn region(&self) -> &Region {
        &self.region
    }

    fn value(&self, p: Point2) -> f64 {
        let inv2s2 = 1.0 / (2.0 * self.shape * self.shape);
        let mut s = self.offset;
        for (node, w) in self.nodes.iter().zip(&self.weights) {
            s += w * fmath::exp(-node.distance_sq(p) * inv2s2);
        }
        s
    }
}

/// Extremes of a field over an inclusive evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldStats {
    pub max_value: f64,
    pub max_location: Point2,
    pub min_value: f64,
    pub range: f64,
}

/// Scans the field on a `resolution x resolution` grid. Ties go to the
/// first node in scan order.
pub fn field_stats<F: SpatialField + ?Sized>(field: &F, resolution: usize) -> FieldStats {
    let grid = EvalGrid::square(*field.region(), resolution);
    let mut max_value = f64::NEG_INFINITY;
    let mut min_value = f64::INFINITY;
    let mut max_location = grid.point(0);
    for i in 0..grid.len() {
        let p = grid.point(i);
        let v = field.value(p);
        if v > max_value {
            max_value = v;
            max_location = p;
        }
        if v < min_value {
            min_value = v;
        }
    }
    FieldStats {
        max_value,
        max_location,
        min_value,
        range: max_value - min_value,
    }
}

/// Point sensor with additive, homoscedastic Gaussian noise and its own
/// seeded RNG stream.
#[derive(Debug, Clone)]
pub struct Sensor {
    noise_std: f64,
    rng: ChaCha8Rng,
}

impl Sensor {
    pub fn new(noise_std: f64, seed: u64) -> Result<Self, FieldError> {
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(FieldError::BadNoise(noise_std));
        }
        Ok(Self {
            noise_std,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// Noisy measurement of `field` at `p`. Rejects queries outside the
    /// field's region. A standard normal draw is consumed even at zero
    /// noise so the stream position does not depend on the noise level.
    pub fn measure<F: SpatialField + ?Sized>(
        &mut self,
        field: &F,
        p: Point2,
    ) -> Result<f64, FieldError> {
        if !field.region().contains(p) {
            return Err(FieldError::OutOfBounds { x: p.x, y: p.y });
        }
        let z: f64 = StandardNormal.sample(&mut self.rng);
        Ok(field.value(p) + self.noise_std * z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn benchmark_field_peaks_at_exactly_one() {
        let f = SyntheticField::four_maxima();
        let (x_star, v_star) = f.known_maximum().unwrap();
        assert_eq!(v_star, 1.0);
        assert_eq!(f.value(x_star), 1.0);
        assert_eq!(x_star, Point2::new(-135.6, 29.0));
    }

    #[test]
    fn benchmark_field_has_four_separated_hotspots() {
        let f = SyntheticField::four_maxima();
        let hotspots = f.hotspots().to_vec();
        assert_eq!(hotspots.len(), 4);
        // Each nominal hotspot dominates a ring of probes around it.
        for c in &hotspots {
            let vc = f.value(*c);
            for k in 0..8 {
                let a = k as f64 * core::f64::consts::FRAC_PI_4;
                let probe = Point2::new(c.x + 1.5 * fmath::cos(a), c.y + 1.5 * fmath::sin(a));
                assert!(
                    f.value(probe) < vc,
                    "hotspot at ({}, {}) not locally dominant",
                    c.x,
                    c.y
                );
            }
        }
        // Basin distinctness: greedy hill-climbing on the survey grid
        // from each hotspot must stop at four different summits, each
        // close to the center it started from.
        let grid = EvalGrid::square(*f.region(), 130);
        let climb = |start: Point2| {
            let mut ix = ((start.x - f.region().x_min) / f.region().width() * 129.0) as usize;
            let mut iy = ((start.y - f.region().y_min) / f.region().height() * 129.0) as usize;
            loop {
                let here = f.value(Point2::new(grid.x_at(ix), grid.y_at(iy)));
                let mut best = (here, ix, iy);
                for dx in -1i64..=1 {
                    for dy in -1i64..=1 {
                        let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                        if (0..130).contains(&jx) && (0..130).contains(&jy) {
                            let v = f
                                .value(Point2::new(grid.x_at(jx as usize), grid.y_at(jy as usize)));
                            if v > best.0 {
                                best = (v, jx as usize, jy as usize);
                            }
                        }
                    }
                }
                if (best.1, best.2) == (ix, iy) {
                    return Point2::new(grid.x_at(ix), grid.y_at(iy));
                }
                (ix, iy) = (best.1, best.2);
            }
        };
        let summits: Vec<Point2> = hotspots.iter().map(|c| climb(*c)).collect();
        for (c, s) in hotspots.iter().zip(&summits) {
            assert!(
                c.distance(*s) < 1.5,
                "climb from ({}, {}) drifted to ({}, {})",
                c.x,
                c.y,
                s.x,
                s.y
            );
        }
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(
                    summits[i].distance(summits[j]) > 3.0,
                    "summits {i} and {j} merged"
                );
            }
        }
    }

    #[test]
    fn benchmark_field_stats_on_survey_grid() {
        let f = SyntheticField::four_maxima();
        let stats = field_stats(&f, 130);
        assert_eq!(stats.max_value, 1.0, "clipped plateau is sampled");
        assert!(stats.max_location.distance(Point2::new(-135.6, 29.0)) < 1.0);
        assert!(stats.min_value < 0.01);
        assert!((stats.range - 1.0).abs() < 0.01);
    }

    #[test]
    fn only_the_global_neighborhood_reaches_high_values() {
        let f = SyntheticField::four_maxima();
        let grid = EvalGrid::square(*f.region(), 130);
        let global = Point2::new(-135.6, 29.0);
        for i in 0..grid.len() {
            let p = grid.point(i);
            if f.value(p) > 0.95 {
                assert!(p.distance(global) < 2.5);
            }
        }
    }

    #[test]
    fn bump_validation_requires_exactly_one_unit_peak() {
        let region = Region::new(0.0, 10.0, 0.0, 10.0).unwrap();
        let mk = |heights: &[f64]| {
            let bumps = heights
                .iter()
                .enumerate()
                .map(|(i, h)| Bump::new(Point2::new(1.0 + i as f64, 5.0), *h, 1.0))
                .collect();
            SyntheticField::new(region, bumps)
        };
        assert!(mk(&[1.0, 0.5]).is_ok());
        assert_eq!(mk(&[0.9, 0.5]), Err(FieldError::BadBumps));
        assert_eq!(mk(&[1.0, 1.0]), Err(FieldError::BadBumps));
        assert_eq!(mk(&[]), Err(FieldError::BadBumps));
    }

    proptest! {
        #[test]
        fn synthetic_values_stay_in_unit_interval(
            x in -155.5f64..-129.5,
            y in 9.0f64..35.0,
        ) {
            let f = SyntheticField::four_maxima();
            let v = f.value(Point2::new(x, y));
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn constant_grid_interpolates_to_the_constant() {
        let axes = vec![0.0, 1.0, 2.0];
        let f = GriddedField::from_grid(axes.clone(), axes, vec![3.25; 9]).unwrap();
        for p in [
            Point2::new(0.0, 0.0),
            Point2::new(1.3, 0.7),
            Point2::new(2.0, 2.0),
            Point2::new(0.1, 1.9),
        ] {
            assert_relative_eq!(f.value(p), 3.25, epsilon = 1e-6);
        }
    }

    #[test]
    fn interpolant_passes_through_grid_nodes() {
        let lon = vec![10.0, 10.5, 11.0, 11.5, 12.0];
        let lat = vec![-2.0, -1.5, -1.0, -0.5];
        let mut values = Vec::new();
        for iy in 0..4 {
            for ix in 0..5 {
                values.push(0.05 + 0.01 * ((ix * 7 + iy * 3) % 11) as f64);
            }
        }
        let f = GriddedField::from_grid(lon.clone(), lat.clone(), values.clone()).unwrap();
        for (iy, &la) in lat.iter().enumerate() {
            for (ix, &lo) in lon.iter().enumerate() {
                let stored = values[iy * 5 + ix];
                assert_relative_eq!(f.value(Point2::new(lo, la)), stored, epsilon = 1e-6);
            }
        }
        assert_relative_eq!(f.shape(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn gridded_field_rejects_malformed_input() {
        let good = vec![0.0, 1.0];
        assert_eq!(
            GriddedField::from_grid(vec![0.0, 0.0], good.clone(), vec![1.0; 4]),
            Err(FieldError::BadAxes)
        );
        assert_eq!(
            GriddedField::from_grid(vec![1.0, 0.0], good.clone(), vec![1.0; 4]),
            Err(FieldError::BadAxes)
        );
        assert_eq!(
            GriddedField::from_grid(good.clone(), good.clone(), vec![1.0; 3]),
            Err(FieldError::BadShape {
                got: 3,
                nx: 2,
                ny: 2
            })
        );
        assert_eq!(
            GriddedField::from_grid(good.clone(), good, vec![1.0, 2.0, f64::NAN, 4.0]),
            Err(FieldError::NonFiniteValue { index: 2 })
        );
    }

    #[test]
    fn sensor_with_zero_noise_reports_field_values() {
        let f = SyntheticField::four_maxima();
        let mut s = Sensor::new(0.0, 7).unwrap();
        let p = Point2::new(-140.0, 20.0);
        assert_eq!(s.measure(&f, p).unwrap(), f.value(p));
        assert_eq!(s.measure(&f, p).unwrap(), f.value(p));
    }

    #[test]
    fn sensor_streams_are_seed_deterministic() {
        let f = SyntheticField::four_maxima();
        let p = Point2::new(-135.0, 28.0);
        let mut a = Sensor::new(0.05, 42).unwrap();
        let mut b = Sensor::new(0.05, 42).unwrap();
        let mut c = Sensor::new(0.05, 43).unwrap();
        let seq_a: Vec<f64> = (0..5).map(|_| a.measure(&f, p).unwrap()).collect();
        let seq_b: Vec<f64> = (0..5).map(|_| b.measure(&f, p).unwrap()).collect();
        let seq_c: Vec<f64> = (0..5).map(|_| c.measure(&f, p).unwrap()).collect();
        assert_eq!(seq_a, seq_b);
        assert_ne!(seq_a, seq_c);
    }

    #[test]
    fn sensor_noise_magnitude_is_calibrated() {
        let f = SyntheticField::four_maxima();
        let p = Point2::new(-140.0, 20.0);
        let truth = f.value(p);
        let mut s = Sensor::new(0.05, 0).unwrap();
        let n = 2000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let e = s.measure(&f, p).unwrap() - truth;
            sum += e;
            sum_sq += e * e;
        }
        let mean = sum / n as f64;
        let std = ((sum_sq - sum * sum / n as f64) / (n - 1) as f64).sqrt();
        assert!(mean.abs() < 0.005, "bias {mean}");
        assert!((std - 0.05).abs() < 0.005, "spread {std}");
    }

    #[test]
    fn sensor_rejects_out_of_region_queries() {
        let f = SyntheticField::four_maxima();
        let mut s = Sensor::new(0.05, 1).unwrap();
        let err = s.measure(&f, Point2::new(-129.0, 20.0));
        assert_eq!(err, Err(FieldError::OutOfBounds { x: -129.0, y: 20.0 }));
        assert!(Sensor::new(-0.1, 0).is_err());
    }
}
