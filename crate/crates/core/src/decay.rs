//! Blockwise-max envelope fitting of transform magnitudes.
//!
//! Fourier transforms of the measures studied here oscillate wildly (Bessel
//! zeros, self-similar cosine products), so a pointwise log-log regression of
//! `|transform|` against frequency is meaningless. Instead the frequency
//! range is split into geometric blocks, the magnitude is replaced by its
//! maximum over each block, and the power law is fitted to the envelope.

use thiserror::Error;

/// Magnitudes at or below this floor are treated as exact zeros of the
/// transform (double-precision cancellation noise).
pub const NOISE_FLOOR: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum DecayError {
    #[error("need at least {min} sample points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("sample abscissae must be positive, finite and increasing")]
    BadAbscissae,
    #[error("need at least 2 blocks, got {0}")]
    TooFewBlocks(usize),
    #[error("frequency range must span more than one block")]
    DegenerateRange,
}

/// Fitted decay order of a frequency envelope.
///
/// `Infinite` flags an envelope sitting below [`NOISE_FLOOR`] everywhere
/// (e.g. Lebesgue measure on the torus, whose nonzero integer coefficients
/// all vanish). It is a tagged value, never a float infinity, so downstream
/// `min{s/2 - 1, r}` logic has to branch on it explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FittedOrder {
    Finite(f64),
    Infinite,
}

impl FittedOrder {
    pub fn as_finite(self) -> Option<f64> {
        match self {
            FittedOrder::Finite(r) => Some(r),
            FittedOrder::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, FittedOrder::Infinite)
    }
}

impl std::fmt::Display for FittedOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FittedOrder::Finite(r) => write!(f, "{r}"),
            FittedOrder::Infinite => write!(f, "inf"),
        }
    }
}

/// Blockwise-max envelope of a transform magnitude with its power-law fit
/// `log(envelope) = intercept - fitted_order * log(freq)`.
#[derive(Debug, Clone)]
pub struct DecayEstimate {
    /// Geometric centers of the retained blocks, strictly increasing.
    pub freqs: Vec<f64>,
    /// Blockwise maxima of the magnitude, each in `[0, 1]` for transforms of
    /// probability measures.
    pub envelope: Vec<f64>,
    /// Fitted order, clamped at 0.
    pub fitted_order: FittedOrder,
    /// `log C` of the fit (natural log).
    pub intercept: f64,
    /// RMS residual of the fit in log space.
    pub residual_rms: f64,
    /// Number of blocks retained for the regression.
    pub block_count: usize,
}

impl DecayEstimate {
    /// Fitted order as a float, or `None` for the infinite sentinel.
    pub fn order(&self) -> Option<f64> {
        self.fitted_order.as_finite()
    }
}

/// Fit a decay envelope to `(t, |value|)` samples.
///
/// Samples must have positive increasing `t`. Blocks are geometric over
/// `[t_first, t_last]`; blocks whose maximum sits at or below
/// [`NOISE_FLOOR`] are dropped from the regression (they can only make the
/// decay look better). If every block is below the floor the transform is
/// numerically zero and the `Infinite` sentinel is returned.
pub fn envelope_fit(samples: &[(f64, f64)], blocks: usize) -> Result<DecayEstimate, DecayError> {
    if samples.len() < 2 {
        return Err(DecayError::TooFewPoints {
            min: 2,
            got: samples.len(),
        });
    }
    if blocks < 2 {
        return Err(DecayError::TooFewBlocks(blocks));
    }
    let t_first = samples[0].0;
    let t_last = samples[samples.len() - 1].0;
    if !(t_first > 0.0) || !t_last.is_finite() || t_last <= t_first {
        return Err(DecayError::BadAbscissae);
    }
    let mut prev = 0.0;
    for &(t, v) in samples {
        if !(t > prev) || !v.is_finite() {
            return Err(DecayError::BadAbscissae);
        }
        prev = t;
    }

    let log_lo = t_first.ln();
    let log_span = t_last.ln() - log_lo;
    let mut block_max = vec![f64::NEG_INFINITY; blocks];
    for &(t, v) in samples {
        let mut b = ((t.ln() - log_lo) / log_span * blocks as f64) as usize;
        if b >= blocks {
            b = blocks - 1;
        }
        let mag = v.abs();
        if mag > block_max[b] {
            block_max[b] = mag;
        }
    }

    let mut freqs = Vec::new();
    let mut envelope = Vec::new();
    let mut any_occupied = false;
    for (b, &m) in block_max.iter().enumerate() {
        if m == f64::NEG_INFINITY {
            continue; // no sample landed here
        }
        any_occupied = true;
        if m <= NOISE_FLOOR {
            continue;
        }
        let center = (log_lo + (b as f64 + 0.5) / blocks as f64 * log_span).exp();
        freqs.push(center);
        envelope.push(m);
    }
    if !any_occupied {
        return Err(DecayError::DegenerateRange);
    }
    if envelope.len() < 2 {
        // Everything at noise level: the transform vanishes identically on
        // the tested range. A single surviving block carries no slope
        // information; report no decay rather than invent one.
        if envelope.is_empty() {
            return Ok(DecayEstimate {
                freqs,
                envelope,
                fitted_order: FittedOrder::Infinite,
                intercept: f64::NEG_INFINITY,
                residual_rms: 0.0,
                block_count: 0,
            });
        }
        return Ok(DecayEstimate {
            intercept: envelope[0].ln(),
            fitted_order: FittedOrder::Finite(0.0),
            residual_rms: 0.0,
            block_count: 1,
            freqs,
            envelope,
        });
    }

    let n = envelope.len() as f64;
    let xs: Vec<f64> = freqs.iter().map(|f| f.ln()).collect();
    let ys: Vec<f64> = envelope.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let r = y - (intercept + slope * x);
        ss += r * r;
    }
    let residual_rms = (ss / n).sqrt();
    let fitted = (-slope).max(0.0);

    Ok(DecayEstimate {
        block_count: envelope.len(),
        freqs,
        envelope,
        fitted_order: FittedOrder::Finite(fitted),
        intercept,
        residual_rms,
    })
}

/// Geometric grid of `points` values from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    (0..points)
        .map(|i| lo * (ratio * i as f64).exp())
        .collect()
}

/// Geometric grid snapped to integers, deduplicated.
pub fn geometric_integer_grid(lo: f64, hi: f64, points: usize) -> Vec<u64> {
    let mut out: Vec<u64> = geometric_grid(lo.max(1.0), hi, points)
        .into_iter()
        .map(|t| t.round() as u64)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_law() {
        let ts = geometric_grid(1.0, 1e4, 400);
        let samples: Vec<(f64, f64)> = ts.iter().map(|&t| (t, 3.0 * t.powf(-0.75))).collect();
        let est = envelope_fit(&samples, 16).unwrap();
        let r = est.order().unwrap();
        assert!((r - 0.75).abs() < 0.02, "r = {r}");
    }

    #[test]
    fn recovers_oscillating_power_law() {
        // |cos| oscillation under a power law: the envelope shrugs it off.
        let ts = geometric_grid(1.0, 1e4, 4000);
        let samples: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| (t, t.powf(-0.5) * (7.3 * t).cos().abs()))
            .collect();
        let est = envelope_fit(&samples, 16).unwrap();
        let r = est.order().unwrap();
        assert!((r - 0.5).abs() < 0.05, "r = {r}");
    }

    #[test]
    fn all_zero_curve_is_infinite() {
        let samples: Vec<(f64, f64)> = geometric_grid(1.0, 100.0, 50)
            .into_iter()
            .map(|t| (t, 1e-16))
            .collect();
        let est = envelope_fit(&samples, 8).unwrap();
        assert!(est.fitted_order.is_infinite());
    }

    #[test]
    fn constant_curve_fits_zero_order() {
        let samples: Vec<(f64, f64)> = geometric_grid(1.0, 1e3, 100)
            .into_iter()
            .map(|t| (t, 0.4))
            .collect();
        let est = envelope_fit(&samples, 8).unwrap();
        assert_eq!(est.order().unwrap(), 0.0);
    }

    #[test]
    fn growth_clamps_to_zero() {
        let samples: Vec<(f64, f64)> = geometric_grid(1.0, 1e3, 100)
            .into_iter()
            .map(|t| (t, 1e-3 * t.sqrt()))
            .collect();
        let est = envelope_fit(&samples, 8).unwrap();
        assert_eq!(est.order().unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(envelope_fit(&[(1.0, 0.5)], 8).is_err());
        assert!(envelope_fit(&[(0.0, 0.5), (2.0, 0.5)], 8).is_err());
        assert!(envelope_fit(&[(2.0, 0.5), (1.0, 0.5)], 8).is_err());
        assert!(envelope_fit(&[(1.0, 0.5), (2.0, 0.5)], 1).is_err());
    }
}
