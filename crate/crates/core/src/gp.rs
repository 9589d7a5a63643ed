//! Gaussian-process regression with a squared-exponential ARD kernel.
//!
//! The model keeps a Cholesky factorization of `K + omega^2 I` current at
//! all times, so prediction is a dot product (mean) plus one forward
//! substitution (variance) per query. Hyperparameters are optimized by
//! minimizing the negative log marginal likelihood with Adam in log
//! space, using analytic gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::fmath;
use crate::geom::Point2;
use crate::linalg::{dot, PackedLower};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Noise-free diagonal gets this relative jitter first when the
/// factorization fails; escalates tenfold per retry.
const JITTER_START_REL: f64 = 1e-8;
const JITTER_MAX_REL: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GpError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(&'static str),
    #[error(
        "kernel matrix not positive definite for {n} observations (max jitter {max_jitter:e})"
    )]
    SingularKernel { n: usize, max_jitter: f64 },
    #[error("non-finite observation ({x}, {y}) = {value}")]
    NonFiniteObservation { x: f64, y: f64, value: f64 },
    #[error("non-finite marginal likelihood")]
    NonFinite,
}

/// Squared-exponential ARD kernel parameters plus homoscedastic
/// observation noise.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Hyperparameters {
    /// Signal standard deviation (sqrt of the kernel's output variance).
    pub signal_std: f64,
    /// Per-axis length scales.
    pub length_scales: [f64; 2],
    /// Observation noise variance.
    pub noise_var: f64,
}

impl Hyperparameters {
    pub fn new(signal_std: f64, length_scales: [f64; 2], noise_var: f64) -> Self {
        Self {
            signal_std,
            length_scales,
            noise_var,
        }
    }

    pub fn validate(&self) -> Result<(), GpError> {
        use GpError::InvalidHyperparameters as Invalid;
        if !(self.signal_std.is_finite() && self.signal_std > 0.0) {
            return Err(Invalid("signal_std must be finite and > 0"));
        }
        if !self.length_scales.iter().all(|l| l.is_finite() && *l > 0.0) {
            return Err(Invalid("length scales must be finite and > 0"));
        }
        if !(self.noise_var.is_finite() && self.noise_var >= 0.0) {
            return Err(Invalid("noise_var must be finite and >= 0"));
        }
        Ok(())
    }
}

/// SE-ARD covariance between two locations.
#[inline]
pub fn kernel(hyper: &Hyperparameters, a: Point2, b: Point2) -> f64 {
    let dx = (a.x - b.x) / hyper.length_scales[0];
    let dy = (a.y - b.y) / hyper.length_scales[1];
    hyper.signal_std * hyper.signal_std * fmath::exp(-0.5 * (dx * dx + dy * dy))
}

/// Reusable buffer for the per-query prediction hot path.
#[derive(Debug, Default, Clone)]
pub struct PredictScratch {
    k: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GpModel {
    hyper: Hyperparameters,
    xs: Vec<Point2>,
    ys: Vec<f64>,
    chol: PackedLower,
    alpha: Vec<f64>,
    jitter: f64,
}

impl GpModel {
    pub fn new(hyper: Hyperparameters) -> Result<Self, GpError> {
        hyper.validate()?;
        Ok(Self {
            hyper,
            xs: Vec::new(),
            ys: Vec::new(),
            chol: PackedLower::zeros(0),
            alpha: Vec::new(),
            jitter: 0.0,
        })
    }

    pub fn with_data(
        hyper: Hyperparameters,
        xs: Vec<Point2>,
        ys: Vec<f64>,
    ) -> Result<Self, GpError> {
        assert_eq!(xs.len(), ys.len());
        let mut model = Self::new(hyper)?;
        for (x, y) in xs.iter().zip(&ys) {
            check_observation(*x, *y)?;
        }
        model.xs = xs;
        model.ys = ys;
        model.refit()?;
        Ok(model)
    }

    pub fn hyper(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn observations(&self) -> (&[Point2], &[f64]) {
        (&self.xs, &self.ys)
    }

    /// Jitter added to the diagonal by the last refit (0 when none was
    /// needed).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn add_observation(&mut self, x: Point2, y: f64) -> Result<(), GpError> {
        check_observation(x, y)?;
        self.xs.push(x);
        self.ys.push(y);
        match self.refit() {
            Ok(()) => Ok(()),
            Err(e) => {
                self.xs.pop();
                self.ys.pop();
                // Factorization state still describes the shorter data.
                self.refit().expect("refit of previously valid data");
                Err(e)
            }
        }
    }

    pub fn extend(&mut self, points: &[(Point2, f64)]) -> Result<(), GpError> {
        for (x, y) in points {
            check_observation(*x, *y)?;
        }
        let n0 = self.xs.len();
        for (x, y) in points {
            self.xs.push(*x);
            self.ys.push(*y);
        }
        match self.refit() {
            Ok(()) => Ok(()),
            Err(e) => {
                self.xs.truncate(n0);
                self.ys.truncate(n0);
                self.refit().expect("refit of previously valid data");
                Err(e)
            }
        }
    }

    pub fn set_hyperparameters(&mut self, hyper: Hyperparameters) -> Result<(), GpError> {
        hyper.validate()?;
        let old = self.hyper;
        self.hyper = hyper;
        match self.refit() {
            Ok(()) => Ok(()),
            Err(e) => {
                self.hyper = old;
                self.refit().expect("refit of previously valid data");
                Err(e)
            }
        }
    }

    fn refit(&mut self) -> Result<(), GpError> {
        let n = self.xs.len();
        if n == 0 {
            self.chol = PackedLower::zeros(0);
            self.alpha.clear();
            self.jitter = 0.0;
            return Ok(());
        }
        let kmat = build_kernel_matrix(&self.xs, &self.hyper);
        let (chol, jitter) = factor_with_jitter(&kmat, &self.hyper)?;
        let mut alpha = self.ys.clone();
        chol.solve(&mut alpha);
        self.chol = chol;
        self.alpha = alpha;
        self.jitter = jitter;
        Ok(())
    }

    /// Posterior mean and standard deviation of the latent field at `p`.
    pub fn predict_point(&self, p: Point2) -> (f64, f64) {
        let mut scratch = PredictScratch::default();
        self.predict_point_with(p, &mut scratch)
    }

    /// Hot-path variant of [`predict_point`](Self::predict_point) with a
    /// caller-owned buffer.
    pub fn predict_point_with(&self, p: Point2, scratch: &mut PredictScratch) -> (f64, f64) {
        let n = self.xs.len();
        let sig2 = self.hyper.signal_std * self.hyper.signal_std;
        if n == 0 {
            return (0.0, self.hyper.signal_std);
        }
        scratch.k.resize(n, 0.0);
        let inv_l1 = 1.0 / self.hyper.length_scales[0];
        let inv_l2 = 1.0 / self.hyper.length_scales[1];
        for (ki, x) in scratch.k.iter_mut().zip(&self.xs) {
            let dx = (p.x - x.x) * inv_l1;
            let dy = (p.y - x.y) * inv_l2;
            *ki = sig2 * fmath::exp(-0.5 * (dx * dx + dy * dy));
        }
        let mean = dot(&scratch.k, &self.alpha);
        self.chol.solve_lower(&mut scratch.k);
        let var = sig2 - dot(&scratch.k, &scratch.k);
        (mean, fmath::sqrt(var.max(0.0)))
    }

    /// Posterior mean and standard deviation at each query.
    pub fn predict(&self, queries: &[Point2]) -> (Vec<f64>, Vec<f64>) {
        let mut scratch = PredictScratch::default();
        let mut means = Vec::with_capacity(queries.len());
        let mut stds = Vec::with_capacity(queries.len());
        for &q in queries {
            let (m, s) = self.predict_point_with(q, &mut scratch);
            means.push(m);
            stds.push(s);
        }
        (means, stds)
    }

    /// Posterior mean only; skips the variance substitution, which makes
    /// dense grid sweeps linear instead of quadratic in the data size.
    pub fn predict_mean(&self, queries: &[Point2]) -> Vec<f64> {
        let n = self.xs.len();
        if n == 0 {
            return vec![0.0; queries.len()];
        }
        let sig2 = self.hyper.signal_std * self.hyper.signal_std;
        let inv_l1 = 1.0 / self.hyper.length_scales[0];
        let inv_l2 = 1.0 / self.hyper.length_scales[1];
        let mut k = vec![0.0; n];
        let mut out = Vec::with_capacity(queries.len());
        for q in queries {
            for (ki, x) in k.iter_mut().zip(&self.xs) {
                let dx = (q.x - x.x) * inv_l1;
                let dy = (q.y - x.y) * inv_l2;
                *ki = sig2 * fmath::exp(-0.5 * (dx * dx + dy * dy));
            }
            out.push(dot(&k, &self.alpha));
        }
        out
    }

    /// Negative log marginal likelihood of the current data under the
    /// current hyperparameters (0 for an empty model).
    pub fn nlml(&self) -> f64 {
        let n = self.xs.len();
        if n == 0 {
            return 0.0;
        }
        0.5 * dot(&self.ys, &self.alpha) + 0.5 * self.chol.logdet() + 0.5 * n as f64 * LN_2PI
    }
}

/// Repeated posterior queries against some GP state. The planner is
/// generic over this so callers can interpose cost accounting.
pub trait Posterior {
    /// Posterior mean and standard deviation at `p`.
    fn mean_std(&mut self, p: Point2) -> (f64, f64);
}

/// Plain query adapter with an internal scratch buffer.
#[derive(Debug)]
pub struct PosteriorEval<'a> {
    model: &'a GpModel,
    scratch: PredictScratch,
}

impl<'a> PosteriorEval<'a> {
    pub fn new(model: &'a GpModel) -> Self {
        Self {
            model,
            scratch: PredictScratch::default(),
        }
    }
}

impl Posterior for PosteriorEval<'_> {
    fn mean_std(&mut self, p: Point2) -> (f64, f64) {
        self.model.predict_point_with(p, &mut self.scratch)
    }
}

fn check_observation(x: Point2, y: f64) -> Result<(), GpError> {
    if x.x.is_finite() && x.y.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(GpError::NonFiniteObservation {
            x: x.x,
            y: x.y,
            value: y,
        })
    }
}

/// Packed noise-free kernel matrix (diagonal = signal variance).
fn build_kernel_matrix(xs: &[Point2], hyper: &Hyperparameters) -> PackedLower {
    let n = xs.len();
    let sig2 = hyper.signal_std * hyper.signal_std;
    let inv_l1 = 1.0 / hyper.length_scales[0];
    let inv_l2 = 1.0 / hyper.length_scales[1];
    let mut m = PackedLower::zeros(n);
    for i in 0..n {
        let xi = xs[i];
        let row = m.row_mut(i);
        for (j, rj) in row.iter_mut().enumerate().take(i) {
            let dx = (xi.x - xs[j].x) * inv_l1;
            let dy = (xi.y - xs[j].y) * inv_l2;
            *rj = sig2 * fmath::exp(-0.5 * (dx * dx + dy * dy));
        }
        row[i] = sig2;
    }
    m
}

/// Factorizes `K + noise_var I`, escalating diagonal jitter (relative to
/// the signal variance) when the bare matrix is numerically indefinite.
fn factor_with_jitter(
    kmat: &PackedLower,
    hyper: &Hyperparameters,
) -> Result<(PackedLower, f64), GpError> {
    let sig2 = hyper.signal_std * hyper.signal_std;
    let mut jitter = 0.0;
    loop {
        let mut chol = kmat.clone();
        chol.add_to_diagonal(hyper.noise_var + jitter);
        if chol.cholesky_in_place().is_ok() {
            return Ok((chol, jitter));
        }
        jitter = if jitter == 0.0 {
            JITTER_START_REL * sig2
        } else {
            jitter * 10.0
        };
        if jitter > JITTER_MAX_REL * sig2 {
            return Err(GpError::SingularKernel {
                n: kmat.n(),
                max_jitter: JITTER_MAX_REL * sig2,
            });
        }
    }
}

/// NLML of arbitrary data under arbitrary hyperparameters, without
/// constructing a model. Used for independent cross-checks and by the
/// optimizer.
pub fn nlml_for_data(xs: &[Point2], ys: &[f64], hyper: &Hyperparameters) -> Result<f64, GpError> {
    hyper.validate()?;
    let (value, _) = eval_nlml(xs, ys, hyper, false)?;
    Ok(value)
}

/// NLML and its gradient in log-parameter space
/// `(ln sigma, ln l1, ln l2, ln noise_var)`.
fn eval_nlml(
    xs: &[Point2],
    ys: &[f64],
    hyper: &Hyperparameters,
    want_grad: bool,
) -> Result<(f64, [f64; 4]), GpError> {
    let n = xs.len();
    if n == 0 {
        return Ok((0.0, [0.0; 4]));
    }
    let kmat = build_kernel_matrix(xs, hyper);
    let (chol, _) = factor_with_jitter(&kmat, hyper)?;
    let mut alpha = ys.to_vec();
    chol.solve(&mut alpha);
    let value = 0.5 * dot(ys, &alpha) + 0.5 * chol.logdet() + 0.5 * n as f64 * LN_2PI;
    if !value.is_finite() {
        return Err(GpError::NonFinite);
    }
    if !want_grad {
        return Ok((value, [0.0; 4]));
    }

    // d nlml / d theta = 1/2 tr((K^-1 - alpha alpha^T) dK/dtheta),
    // accumulated over the packed lower triangle with off-diagonal
    // entries counted twice.
    let kinv = chol.inverse_of_factored();
    let inv_l1 = 1.0 / hyper.length_scales[0];
    let inv_l2 = 1.0 / hyper.length_scales[1];
    let noise = hyper.noise_var;
    let mut g = [0.0f64; 4];
    for i in 0..n {
        let xi = xs[i];
        let krow = kmat.row(i);
        let wrow = kinv.row(i);
        for j in 0..i {
            let w = wrow[j] - alpha[i] * alpha[j];
            let kij = krow[j];
            let dx = (xi.x - xs[j].x) * inv_l1;
            let dy = (xi.y - xs[j].y) * inv_l2;
            g[0] += 2.0 * w * kij;
            g[1] += w * kij * (dx * dx);
            g[2] += w * kij * (dy * dy);
        }
        let w = wrow[i] - alpha[i] * alpha[i];
        // Diagonal: dK/d(ln sigma) = 2 sigma^2, length-scale terms vanish.
        g[0] += w * krow[i];
        g[3] += 0.5 * w * noise;
    }
    if !g.iter().all(|v| v.is_finite()) {
        return Err(GpError::NonFinite);
    }
    Ok((value, g))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct OptimizeOptions {
    pub max_iters: usize,
    pub learning_rate: f64,
    /// Deterministically perturbed extra starts, in addition to `init`.
    pub perturbed_restarts: usize,
    /// When the data has at least twice this many points, starts are
    /// first screened on a strided subset and only the best is polished
    /// on the full data. 0 disables screening.
    pub screen_subset: usize,
    pub screen_iters: usize,
    pub grad_tol: f64,
    /// Keep the noise variance at its initial value.
    pub fix_noise: bool,
}

impl OptimizeOptions {
    /// Thorough multi-start fit for offline hyperparameter recovery.
    pub fn full() -> Self {
        Self {
            max_iters: 60,
            learning_rate: 0.10,
            perturbed_restarts: 4,
            screen_subset: 300,
            screen_iters: 40,
            grad_tol: 1e-5,
            fix_noise: true,
        }
    }

    /// Cheap warm-started refinement for in-mission use.
    pub fn warm(max_iters: usize) -> Self {
        Self {
            max_iters,
            learning_rate: 0.05,
            perturbed_restarts: 0,
            screen_subset: 0,
            screen_iters: 0,
            grad_tol: 1e-6,
            fix_noise: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizeStatus {
    /// A start beat the initial NLML; the returned value is the best seen.
    Improved,
    /// No evaluated candidate improved on `init`; `init` is returned.
    KeptInit,
    /// Every start failed numerically; `init` is returned unchanged.
    AllStartsFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub hyper: Hyperparameters,
    /// Full-data NLML of the returned hyperparameters (infinite when
    /// even `init` cannot be evaluated).
    pub nlml: f64,
    pub status: OptimizeStatus,
}

const THETA_LO: [f64; 4] = [-9.2, -6.9, -6.9, -27.6]; // ln 1e-4, ln 1e-3, ln 1e-12
const THETA_HI: [f64; 4] = [9.2, 11.5, 11.5, 9.2];

fn to_theta(h: &Hyperparameters) -> [f64; 4] {
    [
        fmath::ln(h.signal_std),
        fmath::ln(h.length_scales[0]),
        fmath::ln(h.length_scales[1]),
        fmath::ln(h.noise_var.max(1e-300)),
    ]
}

fn from_theta(t: &[f64; 4]) -> Hyperparameters {
    Hyperparameters {
        signal_std: fmath::exp(t[0]),
        length_scales: [fmath::exp(t[1]), fmath::exp(t[2])],
        noise_var: fmath::exp(t[3]),
    }
}

struct AdamRun {
    best_value: f64,
    best_theta: [f64; 4],
}

/// Adam descent on the NLML surface. Returns the best evaluated point;
/// `None` when not even the starting point evaluates.
fn adam_descent(
    xs: &[Point2],
    ys: &[f64],
    theta0: [f64; 4],
    opts: &OptimizeOptions,
    max_iters: usize,
) -> Option<AdamRun> {
    let active = [true, true, true, !opts.fix_noise];
    let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);
    let mut theta = theta0;
    let mut m = [0.0f64; 4];
    let mut v = [0.0f64; 4];
    let mut best: Option<(f64, [f64; 4])> = None;

    for it in 1..=max_iters.max(1) {
        let hyper = from_theta(&theta);
        let (value, grad) = match eval_nlml(xs, ys, &hyper, true) {
            Ok(r) => r,
            Err(_) => break,
        };
        if best.map_or(true, |(b, _)| value < b) {
            best = Some((value, theta));
        }
        let gmax = grad
            .iter()
            .zip(&active)
            .filter(|(_, a)| **a)
            .map(|(g, _)| fmath::abs(*g))
            .fold(0.0f64, f64::max);
        if gmax < opts.grad_tol {
            break;
        }
        let bc1 = 1.0 - libm::pow(beta1, it as f64);
        let bc2 = 1.0 - libm::pow(beta2, it as f64);
        for d in 0..4 {
            if !active[d] {
                continue;
            }
            m[d] = beta1 * m[d] + (1.0 - beta1) * grad[d];
            v[d] = beta2 * v[d] + (1.0 - beta2) * grad[d] * grad[d];
            let step = opts.learning_rate * (m[d] / bc1) / (fmath::sqrt(v[d] / bc2) + eps);
            theta[d] = (theta[d] - step).clamp(THETA_LO[d], THETA_HI[d]);
        }
    }
    best.map(|(best_value, best_theta)| AdamRun {
        best_value,
        best_theta,
    })
}

/// Deterministic spread of starting points around `init`: scale patterns
/// over (signal, both length scales).
fn perturbed_start(theta0: &[f64; 4], index: usize) -> [f64; 4] {
    const LN3: f64 = 1.098_612_288_668_109_8;
    let pattern: [(f64, f64); 4] = [(-LN3, -LN3), (LN3, LN3), (-LN3, LN3), (LN3, -LN3)];
    let round = (index / 4) as f64 + 1.0;
    let (ds, dl) = pattern[index % 4];
    let mut t = *theta0;
    t[0] = (t[0] + round * ds).clamp(THETA_LO[0], THETA_HI[0]);
    t[1] = (t[1] + round * dl).clamp(THETA_LO[1], THETA_HI[1]);
    t[2] = (t[2] + round * dl).clamp(THETA_LO[2], THETA_HI[2]);
    t
}

/// Minimizes the NLML of the model's data starting from `init`.
///
/// The returned hyperparameters never score worse than `init` on the
/// full data: every candidate is compared against the initial NLML and
/// `init` is returned when nothing improves on it.
pub fn optimize_hyperparameters(
    model: &GpModel,
    init: &Hyperparameters,
    opts: &OptimizeOptions,
) -> OptimizeResult {
    let (xs, ys) = model.observations();
    optimize_for_data(xs, ys, init, opts)
}

pub fn optimize_for_data(
    xs: &[Point2],
    ys: &[f64],
    init: &Hyperparameters,
    opts: &OptimizeOptions,
) -> OptimizeResult {
    if xs.is_empty() {
        return OptimizeResult {
            hyper: *init,
            nlml: 0.0,
            status: OptimizeStatus::KeptInit,
        };
    }
    let init_value = nlml_for_data(xs, ys, init).unwrap_or(f64::INFINITY);
    let theta_init = to_theta(init);
    let starts: Vec<[f64; 4]> = core::iter::once(theta_init)
        .chain((0..opts.perturbed_restarts).map(|i| perturbed_start(&theta_init, i)))
        .collect();

    let n = xs.len();
    let screening = opts.screen_subset > 0 && n >= 2 * opts.screen_subset;
    let polish_starts: Vec<[f64; 4]> = if screening {
        let m = opts.screen_subset;
        let mut sub_xs = Vec::with_capacity(m);
        let mut sub_ys = Vec::with_capacity(m);
        for i in 0..m {
            let idx = i * n / m;
            sub_xs.push(xs[idx]);
            sub_ys.push(ys[idx]);
        }
        let mut screened: Vec<(f64, [f64; 4])> = starts
            .iter()
            .filter_map(|s| {
                adam_descent(&sub_xs, &sub_ys, *s, opts, opts.screen_iters)
                    .map(|run| (run.best_value, run.best_theta))
            })
            .collect();
        screened.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Polish only the most promising basin on the full data.
        screened.into_iter().take(1).map(|(_, t)| t).collect()
    } else {
        starts
    };

    let mut best: Option<(f64, [f64; 4])> = None;
    for start in &polish_starts {
        if let Some(run) = adam_descent(xs, ys, *start, opts, opts.max_iters) {
            if best.map_or(true, |(b, _)| run.best_value < b) {
                best = Some((run.best_value, run.best_theta));
            }
        }
    }

    match best {
        Some((value, theta)) if value < init_value => {
            let mut hyper = from_theta(&theta);
            if opts.fix_noise {
                // Do not round-trip the fixed value through log space.
                hyper.noise_var = init.noise_var;
            }
            OptimizeResult {
                hyper,
                nlml: value,
                status: OptimizeStatus::Improved,
            }
        }
        Some(_) => OptimizeResult {
            hyper: *init,
            nlml: init_value,
            status: OptimizeStatus::KeptInit,
        },
        None if init_value.is_finite() => OptimizeResult {
            hyper: *init,
            nlml: init_value,
            status: OptimizeStatus::KeptInit,
        },
        None => OptimizeResult {
            hyper: *init,
            nlml: f64::INFINITY,
            status: OptimizeStatus::AllStartsFailed,
        },
    }
}
