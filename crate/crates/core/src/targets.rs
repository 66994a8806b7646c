//! Shrinking-target hit counting.
//!
//! Targets are fiber strips `A_k = T x ball(b_k, r_k)` with radius law
//! `r_k = C k^-p`; an orbit of the transvection hits `A_k` at time `k` when
//! `y + k x mod 1` lands in the ball. Because the fiber coordinate is
//! uniform and independent of `x`, the expected count is exactly
//! `E(S_N) = sum_{k<=N} min(2 r_k, 1)` for every base measure.

use rayon::prelude::*;
use thiserror::Error;

use crate::measure::Measure1D;
use crate::rng;
use rand::Rng;

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("radius law needs C > 0 and 0 <= p < 1, got C={c}, p={p}")]
    BadRadiusLaw { c: f64, p: f64 },
    #[error("need at least one orbit and one checkpoint")]
    Empty,
    #[error("checkpoints must be increasing and within n_max")]
    BadCheckpoints,
    #[error("mstp needs alpha in (0,1), s > 0, C > 0")]
    BadMstpParams,
}

/// Center schedule for the shrinking balls.
#[derive(Debug, Clone)]
pub enum CenterRule {
    Explicit(Vec<f64>),
    /// Low-discrepancy default: `b_k = frac(k / golden ratio)`.
    GoldenRotation,
    Constant(f64),
}

impl CenterRule {
    fn center(&self, k: usize) -> f64 {
        match self {
            CenterRule::Explicit(v) => v[(k - 1) % v.len()],
            CenterRule::GoldenRotation => {
                (k as f64 * 0.618_033_988_749_894_9).rem_euclid(1.0)
            }
            CenterRule::Constant(b) => *b,
        }
    }
}

/// Radius law `r_k = C k^-p`. Effective radii are clamped at 1/2 (a ball of
/// radius 1/2 is the whole circle), which keeps `E(S_N)` exact when `C > 1/2`
/// makes the first few balls wrap.
#[derive(Debug, Clone, Copy)]
pub struct RadiusLaw {
    pub c: f64,
    pub p: f64,
}

impl RadiusLaw {
    pub fn effective(&self, k: usize) -> f64 {
        (self.c * (k as f64).powf(-self.p)).min(0.5)
    }
}

#[derive(Debug, Clone)]
pub struct TargetScheme {
    pub centers: CenterRule,
    pub radius: RadiusLaw,
    pub n_max: usize,
}

impl TargetScheme {
    pub fn new(
        centers: CenterRule,
        c: f64,
        p: f64,
        n_max: usize,
    ) -> Result<Self, TargetError> {
        if !(c > 0.0) || !(0.0..1.0).contains(&p) {
            return Err(TargetError::BadRadiusLaw { c, p });
        }
        Ok(TargetScheme {
            centers,
            radius: RadiusLaw { c, p },
            n_max,
        })
    }
}

/// Hit counts of one orbit at the checkpoints.
#[derive(Debug, Clone)]
pub struct HitCount {
    pub checkpoints: Vec<usize>,
    pub counts: Vec<usize>,
}

/// Ensemble of orbits with the exact expectation at each checkpoint.
#[derive(Debug, Clone)]
pub struct HitEnsemble {
    pub checkpoints: Vec<usize>,
    pub expected: Vec<f64>,
    pub orbits: Vec<HitCount>,
    pub warning: Option<String>,
}

impl HitEnsemble {
    /// Ensemble mean of `S_N / E(S_N)` at the last checkpoint.
    pub fn mean_final_ratio(&self) -> f64 {
        let last = self.checkpoints.len() - 1;
        let e = self.expected[last];
        self.orbits
            .iter()
            .map(|o| o.counts[last] as f64 / e)
            .sum::<f64>()
            / self.orbits.len() as f64
    }

    /// Largest `|S_N - E(S_N)|` over orbits at the last checkpoint.
    pub fn max_final_deviation(&self) -> f64 {
        let last = self.checkpoints.len() - 1;
        let e = self.expected[last];
        self.orbits
            .iter()
            .map(|o| (o.counts[last] as f64 - e).abs())
            .fold(0.0, f64::max)
    }

    /// Mean and standard error of `S_N` at the last checkpoint.
    pub fn final_mean_and_stderr(&self) -> (f64, f64) {
        let last = self.checkpoints.len() - 1;
        let n = self.orbits.len() as f64;
        let mean = self
            .orbits
            .iter()
            .map(|o| o.counts[last] as f64)
            .sum::<f64>()
            / n;
        let var = self
            .orbits
            .iter()
            .map(|o| (o.counts[last] as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        (mean, (var / n).sqrt())
    }
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Count shrinking-target hits along transvection orbits.
///
/// Each orbit draws `(x, y) ~ base (x) uniform`, iterates
/// `T(x,y) = (x, y+x)` and counts `y + k x mod 1` landing in
/// `ball(b_k, r_k)`. Orbits run on independent RNG streams and aggregate in
/// orbit order. The hypotheses behind ratio convergence want `p < 1/2`;
/// larger exponents are admitted with a warning in the result.
pub fn run_counting(
    base: &Measure1D,
    scheme: &TargetScheme,
    n_orbits: usize,
    seed: u64,
    checkpoints: &[usize],
) -> Result<HitEnsemble, TargetError> {
    if n_orbits == 0 || checkpoints.is_empty() {
        return Err(TargetError::Empty);
    }
    if checkpoints.windows(2).any(|w| w[1] <= w[0])
        || *checkpoints.last().unwrap() > scheme.n_max
        || checkpoints[0] == 0
    {
        return Err(TargetError::BadCheckpoints);
    }
    let warning = (scheme.radius.p >= 0.5).then(|| {
        format!(
            "radius exponent p = {} is outside the ratio-convergence regime p < 1/2",
            scheme.radius.p
        )
    });

    let n_max = *checkpoints.last().unwrap();
    // Precompute the center/radius schedule once; orbits share it.
    let radii: Vec<f64> = (1..=n_max).map(|k| scheme.radius.effective(k)).collect();
    let centers: Vec<f64> = (1..=n_max).map(|k| scheme.centers.center(k)).collect();

    let mut expected = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0;
    let mut ci = 0;
    for k in 1..=n_max {
        acc += (2.0 * radii[k - 1]).min(1.0);
        if checkpoints[ci] == k {
            expected.push(acc);
            ci += 1;
            if ci == checkpoints.len() {
                break;
            }
        }
    }

    let orbits: Vec<HitCount> = (0..n_orbits)
        .into_par_iter()
        .map(|orbit| {
            let mut rng = rng::stream(seed, orbit as u64 + 1);
            let mut xs = Vec::with_capacity(1);
            base.sample_into(&mut rng, 1, &mut xs);
            let x = xs[0].rem_euclid(1.0);
            let y = rng.random::<f64>();
            let mut pos = y;
            let mut count = 0usize;
            let mut counts = Vec::with_capacity(checkpoints.len());
            let mut ci = 0;
            for k in 1..=n_max {
                pos = (pos + x).rem_euclid(1.0);
                let r = radii[k - 1];
                if r >= 0.5 || circ_dist(pos, centers[k - 1]) < r {
                    count += 1;
                }
                if checkpoints[ci] == k {
                    counts.push(count);
                    ci += 1;
                    if ci == checkpoints.len() {
                        break;
                    }
                }
            }
            HitCount {
                checkpoints: checkpoints.to_vec(),
                counts,
            }
        })
        .collect();

    Ok(HitEnsemble {
        checkpoints: checkpoints.to_vec(),
        expected,
        orbits,
        warning,
    })
}

/// Partial sums of the raw expectation `2 sum C k^-p` against the asymptotic
/// `(2C/(1-p)) N^(1-p)`.
#[derive(Debug, Clone)]
pub struct ExpectationSeries {
    pub checkpoints: Vec<usize>,
    pub partial: Vec<f64>,
    pub asymptotic: Vec<f64>,
    pub relative_gap: Vec<f64>,
}

pub fn expectation_series(scheme: &TargetScheme, checkpoints: &[usize]) -> ExpectationSeries {
    let n_max = checkpoints.last().copied().unwrap_or(0);
    let mut partial = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0;
    let mut ci = 0;
    for k in 1..=n_max {
        acc += 2.0 * scheme.radius.c * (k as f64).powf(-scheme.radius.p);
        if ci < checkpoints.len() && checkpoints[ci] == k {
            partial.push(acc);
            ci += 1;
        }
    }
    let asymptotic: Vec<f64> = checkpoints
        .iter()
        .map(|&n| {
            2.0 * scheme.radius.c / (1.0 - scheme.radius.p)
                * (n as f64).powf(1.0 - scheme.radius.p)
        })
        .collect();
    let relative_gap = partial
        .iter()
        .zip(&asymptotic)
        .map(|(p, a)| (p - a).abs() / a.abs().max(f64::MIN_POSITIVE))
        .collect();
    ExpectationSeries {
        checkpoints: checkpoints.to_vec(),
        partial,
        asymptotic,
        relative_gap,
    }
}

/// Window of the growth indicator: a point exhibits unbounded hit growth
/// when its count still increases over the last factor-of-10 stretch of
/// times, i.e. `S(N) > S(N/10)`. Frozen after a pilot run; counts of
/// Diophantine rotations grow like `log N`, so one decade is where the next
/// hit is due.
pub const MSTP_GROWTH_WINDOW: usize = 10;

#[derive(Debug, Clone)]
pub struct MstpResult {
    pub fraction: f64,
    pub window_start: usize,
    /// `(S(N/10), S(N))` per sample point.
    pub counts: Vec<(usize, usize)>,
}

/// Rotation shrinking-target experiment: for uniform random `y`, count hits
/// `y + n alpha mod 1` in `ball(0, C n^-s)` and report the fraction of
/// points whose count keeps growing over the last decade of times.
///
/// At `s = 1` the target mass sum diverges and rotations by 1-Diophantine
/// (badly approximable) angles score hits at a steady logarithmic rate,
/// while rational angles strand all but a vanishing fraction of starting
/// points once the radii drop below their distance to the finite orbit. At
/// `s > 1` a non-`s`-Diophantine angle has no business scoring late hits at
/// all. This is a statistical indicator with frozen thresholds, not a
/// decision procedure: MSTP is an a.s.-limsup property that no finite run
/// decides.
pub fn mstp_experiment(
    alpha: f64,
    s: f64,
    c: f64,
    n_points: usize,
    n_max: usize,
    seed: u64,
) -> Result<MstpResult, TargetError> {
    if !(alpha > 0.0 && alpha < 1.0) || !(s > 0.0) || !(c > 0.0) || n_points == 0 || n_max < 100
    {
        return Err(TargetError::BadMstpParams);
    }
    let radii: Vec<f64> = (1..=n_max)
        .map(|n| (c * (n as f64).powf(-s)).min(0.5))
        .collect();
    let window_start = n_max / MSTP_GROWTH_WINDOW;
    let counts: Vec<(usize, usize)> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64 + 1);
            let y = rng.random::<f64>();
            let mut pos = y;
            let mut count = 0usize;
            let mut at_window = 0usize;
            for n in 1..=n_max {
                pos = (pos + alpha).rem_euclid(1.0);
                let r = radii[n - 1];
                if r >= 0.5 || circ_dist(pos, 0.0) < r {
                    count += 1;
                }
                if n == window_start {
                    at_window = count;
                }
            }
            (at_window, count)
        })
        .collect();
    let fraction = counts.iter().filter(|(w, f)| f > w).count() as f64 / n_points as f64;
    Ok(MstpResult {
        fraction,
        window_start,
        counts,
    })
}
