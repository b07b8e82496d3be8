//! Distance-based Kriging with an exponential kernel.
//!
//! The model never sees genomes, only distances: it is fitted on an archive
//! distance matrix and queried with the vector of distances from a candidate
//! to the archive. The correlation between two points at distance `d` is
//! `exp(-theta * d)`. `theta` is chosen by maximizing the concentrated
//! log-likelihood of a constant-trend Gaussian process: a 100-point
//! log-spaced grid over the bounds, then golden-section refinement inside the
//! bracket around the best grid point.
//!
//! Observations are minimized. Callers maximizing a fitness pass its
//! negation.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::distance::DistanceMatrix;
use crate::linalg::{dot, Cholesky};

/// First nugget tried; it is multiplied by 10 on every failed factorization.
pub const NUGGET_START: f64 = 1e-8;
/// Largest nugget tried before the model is declared degenerate.
pub const NUGGET_CAP: f64 = 1e-2;
pub const THETA_GRID_POINTS: usize = 100;
/// Width, in `ln theta`, at which golden-section refinement stops.
pub const THETA_TOLERANCE: f64 = 1e-6;

/// Standard deviations below this give zero expected improvement.
const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurrogateError {
    #[error("Kriging needs at least 2 observations, got {0}")]
    TooFewPoints(usize),
    #[error("expected {expected} values, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("observations must be finite")]
    NonFinite,
    #[error("invalid theta bounds [{low}, {high}]")]
    InvalidBounds { low: f64, high: f64 },
    #[error("correlation matrix is not positive definite even with nugget {nugget:e} (theta = {theta})")]
    Degenerate { theta: f64, nugget: f64 },
}

/// Search interval for the kernel parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaBounds {
    low: f64,
    high: f64,
}

impl ThetaBounds {
    pub fn new(low: f64, high: f64) -> Result<Self, SurrogateError> {
        if !(low > 0.0 && high > low && high.is_finite()) {
            return Err(SurrogateError::InvalidBounds { low, high });
        }
        Ok(ThetaBounds { low, high })
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }
}

impl Default for ThetaBounds {
    fn default() -> Self {
        ThetaBounds {
            low: 1e-3,
            high: 1e3,
        }
    }
}

#[inline]
pub fn kernel(d: f64, theta: f64) -> f64 {
    libm::exp(-theta * d)
}

/// Fitted Kriging model.
#[derive(Debug, Clone)]
pub struct KrigingModel {
    theta: f64,
    nugget: f64,
    mean: f64,
    variance: f64,
    log_likelihood: f64,
    chol: Cholesky,
    /// `L^-1 1`
    ones_w: Vec<f64>,
    /// `L^-1 (y - mean)`
    resid_w: Vec<f64>,
    /// `1^T K^-1 1`
    ones_quad: f64,
    y_min: f64,
}

/// Predictive distribution at a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl KrigingModel {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    /// Estimated process mean.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Estimated process variance.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// Smallest training observation.
    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn len(&self) -> usize {
        self.chol.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Predicts at a point given its distances to every training point.
    pub fn predict(&self, distances: &[f64]) -> Result<Prediction, SurrogateError> {
        let n = self.len();
        if distances.len() != n {
            return Err(SurrogateError::LengthMismatch {
                expected: n,
                found: distances.len(),
            });
        }
        let mut v: Vec<f64> = distances.iter().map(|&d| kernel(d, self.theta)).collect();
        self.chol.forward_solve(&mut v);
        let mean = self.mean + dot(&v, &self.resid_w);
        let k_quad = dot(&v, &v);
        let trend = 1.0 - dot(&self.ones_w, &v);
        let variance = self.variance * (1.0 - k_quad + trend * trend / self.ones_quad);
        Ok(Prediction {
            mean,
            variance: variance.max(0.0),
        })
    }

    /// Expected improvement over the best training observation.
    pub fn expected_improvement(&self, distances: &[f64]) -> Result<f64, SurrogateError> {
        let p = self.predict(distances)?;
        Ok(expected_improvement(p.mean, p.variance, self.y_min))
    }
}

/// Trend and variance estimates for one factorization.
struct Estimates {
    ones_w: Vec<f64>,
    resid_w: Vec<f64>,
    ones_quad: f64,
    mean: f64,
    variance: f64,
    log_likelihood: f64,
}

/// Appends rows `chol.dim()..d.len()` of `exp(-theta D) + nugget I`.
/// Returns `false` (with the factor partially grown) on a bad pivot.
fn extend_rows(chol: &mut Cholesky, d: &DistanceMatrix, theta: f64, nugget: f64, row: &mut Vec<f64>) -> bool {
    for i in chol.dim()..d.len() {
        row.clear();
        row.extend(d.row(i)[..i].iter().map(|&dij| kernel(dij, theta)));
        row.push(1.0 + nugget);
        if !chol.extend(row) {
            return false;
        }
    }
    true
}

/// Factorizes `exp(-theta D) + nugget I`, multiplying the nugget by 10 after
/// every failure, starting from `nugget`. `None` past the cap.
fn factor_with_ladder(d: &DistanceMatrix, theta: f64, mut nugget: f64) -> Option<(Cholesky, f64)> {
    let mut row = Vec::with_capacity(d.len());
    // Compare with slack so rounding in the repeated products does not skip
    // the cap itself.
    while nugget <= NUGGET_CAP * 1.000_001 {
        let mut chol = Cholesky::empty();
        if extend_rows(&mut chol, d, theta, nugget, &mut row) {
            return Some((chol, nugget));
        }
        nugget *= 10.0;
    }
    None
}

fn estimates(chol: &Cholesky, y: &[f64]) -> Estimates {
    let n = y.len();
    let mut ones_w = vec![1.0; n];
    chol.forward_solve(&mut ones_w);
    let mut y_w = y.to_vec();
    chol.forward_solve(&mut y_w);
    let ones_quad = dot(&ones_w, &ones_w);
    let mean = dot(&ones_w, &y_w) / ones_quad;
    let resid_w: Vec<f64> = y_w.iter().zip(&ones_w).map(|(a, b)| a - mean * b).collect();
    let variance = dot(&resid_w, &resid_w) / n as f64;
    let log_likelihood =
        -0.5 * (n as f64 * libm::log(variance.max(f64::MIN_POSITIVE)) + chol.log_det());
    Estimates {
        ones_w,
        resid_w,
        ones_quad,
        mean,
        variance,
        log_likelihood,
    }
}

fn factorize(d: &DistanceMatrix, theta: f64) -> Result<(Cholesky, f64), SurrogateError> {
    factor_with_ladder(d, theta, NUGGET_START).ok_or(SurrogateError::Degenerate {
        theta,
        nugget: NUGGET_CAP,
    })
}

fn check_inputs(d: &DistanceMatrix, y: &[f64]) -> Result<(), SurrogateError> {
    if y.len() != d.len() {
        return Err(SurrogateError::LengthMismatch {
            expected: d.len(),
            found: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(SurrogateError::TooFewPoints(y.len()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SurrogateError::NonFinite);
    }
    Ok(())
}

/// Concentrated log-likelihood `-(n ln sigma^2 + ln det K) / 2` at `theta`,
/// using the same nugget escalation as [`fit`].
pub fn concentrated_log_likelihood(d: &DistanceMatrix, y: &[f64], theta: f64) -> Result<f64, SurrogateError> {
    check_inputs(d, y)?;
    factorize(d, theta).map(|(chol, _)| estimates(&chol, y).log_likelihood)
}

/// Grid-point factorizations kept between fits on a growing archive.
///
/// When the distance matrix of a fit extends the one of the previous fit
/// (new points appended, old entries unchanged), each grid factor is
/// extended by the new rows instead of being recomputed. The nugget ladder
/// gives the same result either way: a nugget that fails on a leading block
/// fails on every extension of it. Any other matrix resets the cache.
#[derive(Clone, Default)]
pub struct FitCache {
    bounds: Option<ThetaBounds>,
    distances: Option<DistanceMatrix>,
    /// Per grid point: the factor and its nugget, or `None` once degenerate.
    grid: Vec<Option<(Cholesky, f64)>>,
}

impl core::fmt::Debug for FitCache {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FitCache")
            .field("bounds", &self.bounds)
            .field("points", &self.distances.as_ref().map_or(0, DistanceMatrix::len))
            .finish()
    }
}

impl FitCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn extends(&self, d: &DistanceMatrix, bounds: ThetaBounds) -> bool {
        let Some(old) = &self.distances else { return false };
        self.bounds == Some(bounds)
            && old.len() <= d.len()
            && (0..old.len()).all(|i| old.row(i)[..i] == d.row(i)[..i])
    }

    /// Brings every grid factor up to `d`.
    fn update(&mut self, d: &DistanceMatrix, bounds: ThetaBounds, grid_thetas: &[f64]) {
        if !self.extends(d, bounds) {
            self.bounds = Some(bounds);
            self.grid = vec![Some((Cholesky::empty(), NUGGET_START)); grid_thetas.len()];
        }
        let mut row = Vec::with_capacity(d.len());
        for (entry, &theta) in self.grid.iter_mut().zip(grid_thetas) {
            let Some((chol, nugget)) = entry else { continue };
            if !extend_rows(chol, d, theta, *nugget, &mut row) {
                *entry = factor_with_ladder(d, theta, *nugget * 10.0);
            }
        }
        self.distances = Some(d.clone());
    }
}

/// Fits `theta` by maximum likelihood within `bounds` and factorizes the
/// correlation matrix at the optimum.
pub fn fit(d: &DistanceMatrix, y: &[f64], bounds: ThetaBounds) -> Result<KrigingModel, SurrogateError> {
    fit_cached(d, y, bounds, &mut FitCache::new())
}

/// [`fit`] reusing grid factorizations from earlier fits through `cache`.
/// The result is identical to an uncached fit.
pub fn fit_cached(
    d: &DistanceMatrix,
    y: &[f64],
    bounds: ThetaBounds,
    cache: &mut FitCache,
) -> Result<KrigingModel, SurrogateError> {
    check_inputs(d, y)?;
    let ln_low = libm::log(bounds.low);
    let ln_high = libm::log(bounds.high);
    let step = (ln_high - ln_low) / (THETA_GRID_POINTS - 1) as f64;
    let grid_thetas: Vec<f64> = (0..THETA_GRID_POINTS)
        .map(|i| libm::exp(ln_low + step * i as f64).clamp(bounds.low, bounds.high))
        .collect();
    cache.update(d, bounds, &grid_thetas);

    let mut best: Option<(usize, f64)> = None;
    for (i, entry) in cache.grid.iter().enumerate() {
        let Some((chol, _)) = entry else { continue };
        let ll = estimates(chol, y).log_likelihood;
        if ll > best.map_or(f64::NEG_INFINITY, |(_, b)| b) {
            best = Some((i, ll));
        }
    }
    let Some((best_index, best_ll)) = best else {
        return Err(SurrogateError::Degenerate {
            theta: bounds.low,
            nugget: NUGGET_CAP,
        });
    };

    // Golden-section search inside the neighbouring grid cells.
    let ll_at = |ln_theta: f64| {
        factorize(d, libm::exp(ln_theta).clamp(bounds.low, bounds.high))
            .map(|(chol, _)| estimates(&chol, y).log_likelihood)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let mut a = ln_low + step * best_index.saturating_sub(1) as f64;
    let mut b = (ln_low + step * (best_index + 1) as f64).min(ln_high);
    let ratio = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut e = a + ratio * (b - a);
    let mut fc = ll_at(c);
    let mut fe = ll_at(e);
    while b - a > THETA_TOLERANCE {
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - ratio * (b - a);
            fc = ll_at(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + ratio * (b - a);
            fe = ll_at(e);
        }
    }
    let (ln_refined, ll_refined) = if fc >= fe { (c, fc) } else { (e, fe) };

    let (theta, (chol, nugget)) = if ll_refined > best_ll {
        let theta = libm::exp(ln_refined).clamp(bounds.low, bounds.high);
        (theta, factorize(d, theta)?)
    } else {
        let grid = cache.grid[best_index].clone().expect("best grid point factorized");
        (grid_thetas[best_index], grid)
    };
    let e = estimates(&chol, y);
    Ok(KrigingModel {
        theta,
        nugget,
        mean: e.mean,
        variance: e.variance,
        log_likelihood: e.log_likelihood,
        chol,
        ones_w: e.ones_w,
        resid_w: e.resid_w,
        ones_quad: e.ones_quad,
        y_min: y.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * libm::exp(-0.5 * z * z)
}

/// Expected improvement below `y_min` of `Y ~ N(mean, variance)`.
pub fn expected_improvement(mean: f64, variance: f64, y_min: f64) -> f64 {
    let s = libm::sqrt(variance.max(0.0));
    if s < MIN_STD {
        return 0.0;
    }
    let gap = y_min - mean;
    let z = gap / s;
    (gap * normal_cdf(z) + s * normal_pdf(z)).max(0.0)
}
