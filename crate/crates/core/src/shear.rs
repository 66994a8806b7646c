//! Conditional covariances for the transvection `T(x,y) = (x, y+x)` and the
//! linear flow `g_t(x,y) = (x, y+tx)` on the 2-torus with base measure `mu`
//! on the first coordinate and uniform fiber.
//!
//! For trigonometric polynomials the expected conditional covariance is a
//! finite exact sum over the supports,
//!
//! ```text
//!   E Cov_t(f1, f2 | I)
//!     = sum_{xi2 != 0} sum_{xi1, k}
//!         conj(f1^(k, xi2)) f2^(xi1, xi2) mu^(xi1 - k + t xi2),
//! ```
//!
//! the `xi2 = 0` terms being exactly the product of conditional expectations.
//! The same sum with real `t` serves the continuous flow: the time parameter
//! only shifts the argument of `mu^`.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::decay::{self, DecayEstimate, FittedOrder};
use crate::measure::{Measure1D, MeasureError};
use crate::observables::{conditional_expectation, ObservableError, TrigPoly2};
use crate::rng;

/// Tolerance of the interval check on fitted decay orders.
pub const BOUND_TOL: f64 = 0.15;

#[derive(Debug, Error)]
pub enum ShearError {
    #[error("discrete systems take nonnegative integer times, got {0}")]
    NonIntegerTime(f64),
    #[error("time must be finite")]
    NonFiniteTime,
    #[error("monte-carlo needs at least one sample")]
    NoSamples,
    #[error("covariance curve needs >= {min} points spanning at least a decade")]
    BadCurve { min: usize },
    #[error("curve lengths disagree")]
    LengthMismatch,
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error(transparent)]
    Fit(#[from] decay::DecayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeKind {
    Discrete,
    Continuous,
}

/// The transvection (discrete) or linear flow (continuous) with base `mu`
/// and uniform fiber, i.e. the compatible measure `mu (x) lambda`.
#[derive(Debug, Clone)]
pub struct ShearSystem {
    pub base: Measure1D,
    pub time_kind: TimeKind,
}

impl ShearSystem {
    pub fn discrete(base: Measure1D) -> Self {
        ShearSystem {
            base,
            time_kind: TimeKind::Discrete,
        }
    }

    pub fn continuous(base: Measure1D) -> Self {
        ShearSystem {
            base,
            time_kind: TimeKind::Continuous,
        }
    }

    fn check_time(&self, t: f64) -> Result<(), ShearError> {
        if !t.is_finite() {
            return Err(ShearError::NonFiniteTime);
        }
        if self.time_kind == TimeKind::Discrete && (t.fract() != 0.0 || t < 0.0) {
            return Err(ShearError::NonIntegerTime(t));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovMethod {
    Spectral,
    MonteCarlo,
}

/// Expected conditional covariance along a time grid.
#[derive(Debug, Clone)]
pub struct CovCurve {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub method: CovMethod,
    /// Standard errors, present exactly for Monte-Carlo curves.
    pub mc_stderr: Option<Vec<f64>>,
}

impl CovCurve {
    pub fn spectral(times: Vec<f64>, values: Vec<Complex64>) -> Result<Self, ShearError> {
        if times.len() != values.len() {
            return Err(ShearError::LengthMismatch);
        }
        Ok(CovCurve {
            times,
            values,
            method: CovMethod::Spectral,
            mc_stderr: None,
        })
    }

    pub fn monte_carlo(
        times: Vec<f64>,
        values: Vec<Complex64>,
        stderr: Vec<f64>,
    ) -> Result<Self, ShearError> {
        if times.len() != values.len() || times.len() != stderr.len() {
            return Err(ShearError::LengthMismatch);
        }
        Ok(CovCurve {
            times,
            values,
            method: CovMethod::MonteCarlo,
            mc_stderr: Some(stderr),
        })
    }
}

/// Exact spectral value of `E Cov_t(f1, f2 | I)`.
pub fn cov_spectral(
    sys: &ShearSystem,
    f1: &TrigPoly2,
    f2: &TrigPoly2,
    t: f64,
) -> Result<Complex64, ShearError> {
    sys.check_time(t)?;
    // Group f1 by fiber frequency once; each f2 mode then scans one row.
    let mut rows: std::collections::BTreeMap<i64, Vec<(i64, Complex64)>> = Default::default();
    for (&(k, k2), &c) in f1.iter() {
        if k2 != 0 {
            rows.entry(k2).or_default().push((k, c));
        }
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for (&(xi1, xi2), &c2) in f2.iter() {
        if xi2 == 0 {
            continue;
        }
        let Some(row) = rows.get(&xi2) else { continue };
        for &(k, c1) in row {
            let arg = (xi1 - k) as f64 + t * xi2 as f64;
            sum += c1.conj() * c2 * sys.base.char_fn(arg)?;
        }
    }
    Ok(sum)
}

/// Spectral covariance curve over a time grid (parallel over times, one
/// deterministic value per entry).
pub fn cov_curve_spectral(
    sys: &ShearSystem,
    f1: &TrigPoly2,
    f2: &TrigPoly2,
    times: &[f64],
) -> Result<CovCurve, ShearError> {
    let values: Vec<Complex64> = times
        .par_iter()
        .map(|&t| cov_spectral(sys, f1, f2, t))
        .collect::<Result<_, _>>()?;
    CovCurve::spectral(times.to_vec(), values)
}

const MC_CHUNK: usize = 1 << 14;

/// Monte-Carlo estimate of `E Cov_t(f1, f2 | I)`: averages
/// `conj(f1(x,y)) f2(x, y + t x) - conj(E(f1|I)(x)) E(f2|I)(x)` over
/// `(x, y) ~ mu (x) lambda`.
///
/// Returns `(mean, stderr)` with `stderr = sqrt((Var Re + Var Im)/n)`.
/// Samples are drawn in fixed-size chunks on per-chunk RNG streams, so the
/// result does not depend on the parallel schedule.
pub fn cov_monte_carlo(
    sys: &ShearSystem,
    f1: &TrigPoly2,
    f2: &TrigPoly2,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(Complex64, f64), ShearError> {
    sys.check_time(t)?;
    if n_samples == 0 {
        return Err(ShearError::NoSamples);
    }
    let ef1 = conditional_expectation(f1, &sys.base)?;
    let ef2 = conditional_expectation(f2, &sys.base)?;

    let chunks: Vec<(u64, usize)> = (0..n_samples.div_ceil(MC_CHUNK))
        .map(|i| (i as u64, MC_CHUNK.min(n_samples - i * MC_CHUNK)))
        .collect();
    let partials: Vec<(Complex64, f64)> = chunks
        .par_iter()
        .map(|&(stream, len)| {
            let mut rng = rng::stream(seed, stream + 1);
            let mut xs = Vec::with_capacity(len);
            sys.base.sample_into(&mut rng, len, &mut xs);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sumsq = 0.0;
            for &x in &xs {
                let y = rng.random::<f64>();
                let v = f1.eval(x, y).conj() * f2.eval(x, y + t * x)
                    - ef1.eval(x, 0.0).conj() * ef2.eval(x, 0.0);
                sum += v;
                sumsq += v.norm_sqr();
            }
            (sum, sumsq)
        })
        .collect();
    let (sum, sumsq) = partials
        .iter()
        .fold((Complex64::new(0.0, 0.0), 0.0), |(s, q), &(ps, pq)| {
            (s + ps, q + pq)
        });
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean.norm_sqr()).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

pub fn cov_curve_monte_carlo(
    sys: &ShearSystem,
    f1: &TrigPoly2,
    f2: &TrigPoly2,
    times: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<CovCurve, ShearError> {
    let mut values = Vec::with_capacity(times.len());
    let mut errs = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let (v, e) = cov_monte_carlo(sys, f1, f2, t, n_samples, seed.wrapping_add(i as u64))?;
        values.push(v);
        errs.push(e);
    }
    CovCurve::monte_carlo(times.to_vec(), values, errs)
}

/// Envelope fit of `|values|` against time, as in
/// [`Measure1D::rajchman_fit`]. Requires at least 16 points spanning at
/// least one decade.
pub fn decay_fit(curve: &CovCurve) -> Result<DecayEstimate, ShearError> {
    decay_fit_with_blocks(curve, default_blocks(curve.times.len()))
}

pub fn decay_fit_with_blocks(
    curve: &CovCurve,
    blocks: usize,
) -> Result<DecayEstimate, ShearError> {
    let n = curve.times.len();
    if n < 16
        || curve.times[0] <= 0.0
        || curve.times[n - 1] / curve.times[0] < 10.0
    {
        return Err(ShearError::BadCurve { min: 16 });
    }
    let samples: Vec<(f64, f64)> = curve
        .times
        .iter()
        .zip(&curve.values)
        .map(|(&t, v)| (t, v.norm()))
        .collect();
    Ok(decay::envelope_fit(&samples, blocks)?)
}

fn default_blocks(len: usize) -> usize {
    (len / 8).clamp(8, 24)
}

/// Outcome of the interval check `gamma in [min{s/2 - 1, r} - tol, r + tol]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundVerdict {
    Pass,
    FailLower { lower: f64 },
    FailUpper { upper: f64 },
    /// The discrete bound assumes `s > 2`; below that it says nothing.
    NotApplicable,
}

impl BoundVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, BoundVerdict::Pass)
    }
}

impl std::fmt::Display for BoundVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundVerdict::Pass => write!(f, "PASS"),
            BoundVerdict::FailLower { lower } => write!(f, "FAIL lower bound {lower}"),
            BoundVerdict::FailUpper { upper } => write!(f, "FAIL upper bound {upper}"),
            BoundVerdict::NotApplicable => write!(f, "NOT APPLICABLE (s <= 2)"),
        }
    }
}

/// Check a fitted covariance decay order `gamma_hat` against the interval
/// `[min{s/2 - 1, r}, r]` predicted for `H^s` observables over a base of
/// Rajchman order `r`. An infinite `r` disables the roof.
pub fn bound_check(gamma_hat: f64, s: f64, r_hat: FittedOrder) -> BoundVerdict {
    if s <= 2.0 {
        return BoundVerdict::NotApplicable;
    }
    let lower = match r_hat {
        FittedOrder::Finite(r) => (s / 2.0 - 1.0).min(r),
        FittedOrder::Infinite => s / 2.0 - 1.0,
    };
    if gamma_hat < lower - BOUND_TOL {
        return BoundVerdict::FailLower { lower };
    }
    if let FittedOrder::Finite(r) = r_hat {
        if gamma_hat > r + BOUND_TOL {
            return BoundVerdict::FailUpper { upper: r };
        }
    }
    BoundVerdict::Pass
}
