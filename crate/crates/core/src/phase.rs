//! Push-forward measures of circle velocity fields and their Fourier decay.
//!
//! The central objects are oscillatory integrals
//!
//! ```text
//!     I(t) = integral_0^1  w(x) exp(2 i pi t xi v(x)) dx
//! ```
//!
//! whose decay order in `t` is governed by the worst critical point of `v`:
//! a critical point of order `q` (derivatives `1..=q` vanish, `q+1` does
//! not) forces `|I(t)| ~ t^(-1/(q+1))`. Two quadratures are provided: a
//! dense composite Gauss rule whose cost grows linearly with `t`, and a
//! Filon-type rule with per-panel linear-phase extraction whose cost grows
//! like `sqrt(t)`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::decay::{self, DecayEstimate};
use crate::measure::{Measure1D, MeasureError};
use crate::rng;

const TAU: f64 = std::f64::consts::TAU;

/// Hard cap on dense-quadrature panels; beyond this the dense mode refuses
/// and points the caller at Filon.
pub const DENSE_PANEL_BUDGET: usize = 1 << 21;

/// Samples whose fiber coordinate is within this distance of an integer are
/// treated as living on the removed zero fiber under `Wrap::Mod1`.
pub const ZERO_FIBER_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("xi must be a nonzero integer")]
    XiZero,
    #[error("time must be finite and nonnegative, got {0}")]
    BadTime(f64),
    #[error(
        "declared critical point at {location} fails order-{order} verification: {detail}"
    )]
    FieldVerification {
        location: f64,
        order: u32,
        detail: String,
    },
    #[error("dense quadrature needs {panels} panels, budget is {budget}; use filon")]
    PanelBudget { panels: usize, budget: usize },
    #[error("scan cell {cell} holds several critical points; rerun with grid_size >= {suggested}")]
    RefinementRequired { cell: usize, suggested: usize },
    #[error("field must be smooth to order >= 2 for scanning")]
    NotSmoothEnough,
    #[error("push-forward concentrated on the removed zero fiber")]
    DegenerateSpec,
    #[error("piecewise polynomial: {0}")]
    Poly(String),
    #[error("t grid must be geometric with at least {0} points")]
    BadGrid(usize),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Fit(#[from] decay::DecayError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A declared critical point: derivatives `1..=order` vanish at `location`,
/// derivative `order + 1` does not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub location: f64,
    pub order: u32,
}

/// A velocity field on the circle `[0, 1)`.
///
/// Declared critical orders are verified numerically at construction with
/// Richardson-extrapolated central differences: derivatives `1..=q` must
/// vanish within `1e-5` of their grid scale and derivative `q+1` must exceed
/// `1e-3` of its grid scale.
#[derive(Clone)]
pub struct VelocityField1D {
    name: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    critical_points: Vec<CriticalPoint>,
    smoothness: u32,
}

impl std::fmt::Debug for VelocityField1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VelocityField1D")
            .field("name", &self.name)
            .field("critical_points", &self.critical_points)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl VelocityField1D {
    pub fn from_fn(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        critical_points: Vec<CriticalPoint>,
        smoothness: u32,
    ) -> Result<Self, PhaseError> {
        let field = VelocityField1D {
            name: name.into(),
            eval: Arc::new(eval),
            critical_points,
            smoothness,
        };
        field.verify_declared()?;
        Ok(field)
    }

    /// Built-in fields: `cos` (unique nondegenerate extrema),
    /// `cos-combo` (order-3 critical point at 1/2), `linear` (chart-only,
    /// discontinuous across the wrap), `const:<c>`.
    pub fn catalog(name: &str) -> Result<Self, PhaseError> {
        match name {
            "cos" => Self::from_fn(
                "cos",
                |x| (TAU * x).cos(),
                vec![
                    CriticalPoint { location: 0.0, order: 1 },
                    CriticalPoint { location: 0.5, order: 1 },
                ],
                6,
            ),
            "cos-combo" => Self::from_fn(
                "cos-combo",
                |x| (TAU * x).cos() + 0.25 * (2.0 * TAU * x).cos(),
                vec![
                    CriticalPoint { location: 0.0, order: 1 },
                    CriticalPoint { location: 0.5, order: 3 },
                ],
                6,
            ),
            "linear" => Self::from_fn("linear", |x| x, vec![], 1),
            other => {
                if let Some(c) = other.strip_prefix("const:") {
                    let c: f64 = c
                        .parse()
                        .map_err(|e| PhaseError::Poly(format!("bad constant `{c}`: {e}")))?;
                    Self::from_fn(format!("const:{c}"), move |_| c, vec![], 6)
                } else {
                    Err(PhaseError::Poly(format!("unknown field `{other}`")))
                }
            }
        }
    }

    /// Piecewise polynomial from CSV rows `x_start,x_end,c0,c1,...` with the
    /// polynomial written in `(x - x_start)`. Pieces must tile `[0, 1)`.
    pub fn piecewise_from_csv(reader: impl std::io::BufRead) -> Result<Self, PhaseError> {
        let mut pieces: Vec<(f64, f64, Vec<f64>)> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with("x_start") {
                continue;
            }
            let nums: Result<Vec<f64>, _> =
                line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let nums =
                nums.map_err(|e| PhaseError::Poly(format!("line {}: {e}", i + 1)))?;
            if nums.len() < 3 {
                return Err(PhaseError::Poly(format!(
                    "line {}: need x_start,x_end,c0,...",
                    i + 1
                )));
            }
            pieces.push((nums[0], nums[1], nums[2..].to_vec()));
        }
        Self::from_pieces(pieces, vec![], 1)
    }

    pub fn from_pieces(
        mut pieces: Vec<(f64, f64, Vec<f64>)>,
        critical_points: Vec<CriticalPoint>,
        smoothness: u32,
    ) -> Result<Self, PhaseError> {
        if pieces.is_empty() {
            return Err(PhaseError::Poly("no pieces".into()));
        }
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cursor = 0.0;
        for &(a, b, _) in &pieces {
            if (a - cursor).abs() > 1e-12 || b <= a {
                return Err(PhaseError::Poly(format!(
                    "pieces must tile [0,1): gap or overlap at {a}"
                )));
            }
            cursor = b;
        }
        if (cursor - 1.0).abs() > 1e-12 {
            return Err(PhaseError::Poly("pieces must end at 1".into()));
        }
        let breaks: Vec<f64> = pieces.iter().map(|p| p.0).collect();
        let eval = move |x: f64| {
            let j = match breaks.binary_search_by(|b| b.total_cmp(&x)) {
                Ok(j) => j,
                Err(0) => 0,
                Err(j) => j - 1,
            };
            let (a, _, coeffs) = &pieces[j];
            let u = x - a;
            coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
        };
        Self::from_fn("piecewise", eval, critical_points, smoothness)
    }

    /// Same field scaled by a nonzero constant; critical structure is
    /// unchanged.
    pub fn scaled(&self, a: f64) -> Self {
        let inner = self.eval.clone();
        VelocityField1D {
            name: format!("{}*{a}", self.name),
            eval: Arc::new(move |x| a * inner(x)),
            critical_points: self.critical_points.clone(),
            smoothness: self.smoothness,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn critical_points(&self) -> &[CriticalPoint] {
        &self.critical_points
    }

    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    /// `l = 1 + max declared order`; the stationary-phase decay exponent of
    /// the uniform push-forward is `1/l`.
    pub fn ell(&self) -> u32 {
        1 + self
            .critical_points
            .iter()
            .map(|c| c.order)
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x.rem_euclid(1.0))
    }

    fn verify_declared(&self) -> Result<(), PhaseError> {
        for cp in &self.critical_points {
            if cp.order == 0 || cp.order + 1 > 5 {
                return Err(PhaseError::FieldVerification {
                    location: cp.location,
                    order: cp.order,
                    detail: "orders 1..=4 are supported".into(),
                });
            }
            for m in 1..=cp.order {
                let scale = self.derivative_scale(m);
                let d = self.fd_derivative(cp.location, m);
                if d.abs() > 1e-5 * scale {
                    return Err(PhaseError::FieldVerification {
                        location: cp.location,
                        order: cp.order,
                        detail: format!(
                            "derivative {m} is {d:.3e}, exceeds 1e-5 x scale {scale:.3e}"
                        ),
                    });
                }
            }
            let m = cp.order + 1;
            let scale = self.derivative_scale(m);
            let d = self.fd_derivative(cp.location, m);
            if d.abs() <= 1e-3 * scale {
                return Err(PhaseError::FieldVerification {
                    location: cp.location,
                    order: cp.order,
                    detail: format!(
                        "derivative {m} is {d:.3e}, below 1e-3 x scale {scale:.3e}"
                    ),
                });
            }
        }
        Ok(())
    }

    /// Richardson-extrapolated central difference of order `m` (1..=5);
    /// the base stencils are O(h^2), extrapolation leaves O(h^4).
    fn fd_derivative(&self, x: f64, m: u32) -> f64 {
        let h = if m <= 4 { 5e-3 } else { 2e-2 };
        let d = |h: f64| central_fd(&|u| self.eval(u), x, m, h);
        (4.0 * d(h / 2.0) - d(h)) / 3.0
    }

    /// Max of `|v^(m)|` over a coarse grid; the relative scale for
    /// vanish/nonvanish thresholds.
    fn derivative_scale(&self, m: u32) -> f64 {
        let grid = 512;
        let mut best = 0.0f64;
        for i in 0..grid {
            let x = i as f64 / grid as f64;
            best = best.max(self.fd_derivative(x, m).abs());
        }
        best.max(1e-12)
    }

    fn max_abs_derivative(&self, m: u32) -> f64 {
        let grid = 2048;
        let mut best = 0.0f64;
        for i in 0..grid {
            let x = i as f64 / grid as f64;
            best = best.max(self.fd_derivative(x, m).abs());
        }
        best
    }
}

fn central_fd(f: &dyn Fn(f64) -> f64, x: f64, m: u32, h: f64) -> f64 {
    match m {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h))
            / (2.0 * h * h * h),
        4 => (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h))
            / h.powi(4),
        5 => (-f(x - 3.0 * h) + 4.0 * f(x - 2.0 * h) - 5.0 * f(x - h) + 5.0 * f(x + h)
            - 4.0 * f(x + 2.0 * h)
            + f(x + 3.0 * h))
            / (2.0 * h.powi(5)),
        _ => unreachable!("derivative order out of range"),
    }
}

/// Quadrature strategy for oscillatory integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadMode {
    /// Composite Gauss panels, at least 20 per oscillation. Cost O(t).
    Dense,
    /// Linear-phase extraction with polynomial amplitude interpolation and
    /// analytic moments. Cost O(sqrt t).
    Filon,
    /// Dense below `t xi = 50`, Filon above.
    Auto,
}

/// `integral_0^1 exp(2 i pi t xi v(x)) dx`.
pub fn oscillatory_integral(
    field: &VelocityField1D,
    xi: i64,
    t: f64,
    quad: QuadMode,
) -> Result<Complex64, PhaseError> {
    oscillatory_integral_weighted(field, xi, t, quad, None)
}

/// Weighted variant `integral_0^1 w(x) exp(2 i pi t xi v(x)) dx`; the weight
/// is how absolutely continuous base measures enter.
pub fn oscillatory_integral_weighted(
    field: &VelocityField1D,
    xi: i64,
    t: f64,
    quad: QuadMode,
    weight: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<Complex64, PhaseError> {
    if xi == 0 {
        return Err(PhaseError::XiZero);
    }
    if !t.is_finite() || t < 0.0 {
        return Err(PhaseError::BadTime(t));
    }
    let s = t * xi as f64;
    match quad {
        QuadMode::Dense => dense_quadrature(field, s, weight),
        QuadMode::Filon => Ok(filon_quadrature(field, s, weight)),
        QuadMode::Auto => {
            if s.abs() <= 50.0 {
                dense_quadrature(field, s, weight)
            } else {
                Ok(filon_quadrature(field, s, weight))
            }
        }
    }
}

const GL4: [(f64, f64); 4] = [
    (-0.8611363115940526, 0.34785484513745385),
    (-0.3399810435848563, 0.6521451548625461),
    (0.3399810435848563, 0.6521451548625461),
    (0.8611363115940526, 0.34785484513745385),
];

fn dense_quadrature(
    field: &VelocityField1D,
    s: f64,
    weight: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<Complex64, PhaseError> {
    let max_slope = field.max_abs_derivative(1) * 1.25;
    let panels = ((20.0 * s.abs() * max_slope).ceil() as usize).max(64);
    if panels > DENSE_PANEL_BUDGET {
        return Err(PhaseError::PanelBudget {
            panels,
            budget: DENSE_PANEL_BUDGET,
        });
    }
    let h = 1.0 / panels as f64;
    let sum: Complex64 = (0..panels)
        .into_par_iter()
        .map(|p| {
            let a = p as f64 * h;
            let mut acc = Complex64::new(0.0, 0.0);
            for &(node, w) in &GL4 {
                let x = a + h * 0.5 * (node + 1.0);
                let amp = weight.map_or(1.0, |w| w(x));
                acc += w * amp * Complex64::cis(TAU * s * field.eval(x));
            }
            acc * (0.5 * h)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(sum)
}

// Degree-8 interpolation nodes (Chebyshev-Lobatto on [-1, 1]) and the
// inverse Vandermonde mapping samples to monomial coefficients.
const FILON_DEG: usize = 8;

fn lobatto_nodes() -> [f64; FILON_DEG + 1] {
    let mut nodes = [0.0; FILON_DEG + 1];
    for (j, n) in nodes.iter_mut().enumerate() {
        *n = -(std::f64::consts::PI * j as f64 / FILON_DEG as f64).cos();
    }
    nodes
}

fn inverse_vandermonde() -> &'static Vec<Vec<f64>> {
    use std::sync::OnceLock;
    static INV: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    INV.get_or_init(|| {
        let n = FILON_DEG + 1;
        let nodes = lobatto_nodes();
        // Gauss-Jordan on [V | I].
        let mut aug = vec![vec![0.0; 2 * n]; n];
        for i in 0..n {
            let mut p = 1.0;
            for j in 0..n {
                aug[i][j] = p;
                p *= nodes[i];
            }
            aug[i][n + i] = 1.0;
        }
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
                .unwrap();
            aug.swap(col, pivot);
            let p = aug[col][col];
            for v in aug[col].iter_mut() {
                *v /= p;
            }
            for row in 0..n {
                if row != col {
                    let f = aug[row][col];
                    for j in 0..2 * n {
                        aug[row][j] -= f * aug[col][j];
                    }
                }
            }
        }
        aug.into_iter().map(|row| row[n..].to_vec()).collect()
    })
}

/// Moments `M_j(c) = integral_-1^1 tau^j exp(i c tau) d tau`, `j <= 8`.
fn filon_moments(c: f64) -> [Complex64; FILON_DEG + 1] {
    let mut m = [Complex64::new(0.0, 0.0); FILON_DEG + 1];
    if c.abs() <= 10.0 {
        // Taylor in c; converges geometrically past m ~ |c|.
        for (j, mj) in m.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..60 {
                if (j + k) % 2 == 0 {
                    acc += term * (2.0 / (j + k + 1) as f64);
                }
                term *= Complex64::new(0.0, c) / (k + 1) as f64;
                if term.norm() < 1e-18 && k > (c.abs() as usize + 4) {
                    break;
                }
            }
            *mj = acc;
        }
    } else {
        // Upward recursion, stable here because |c| > j.
        let ic = Complex64::new(0.0, c);
        let eic = Complex64::cis(c);
        m[0] = Complex64::new(2.0 * c.sin() / c, 0.0);
        for j in 1..=FILON_DEG {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            m[j] = (eic - sign * eic.conj()) / ic - (j as f64 / ic) * m[j - 1];
        }
    }
    m
}

fn filon_quadrature(
    field: &VelocityField1D,
    s: f64,
    weight: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Complex64 {
    const QCAP: f64 = 0.5;
    let m2 = field.max_abs_derivative(2) * 1.25;
    let m3 = field.max_abs_derivative(3) * 1.25;
    let p2 = (TAU * s.abs() * m2 / (8.0 * QCAP)).sqrt();
    let p3 = (TAU * s.abs() * m3 / (48.0 * QCAP)).cbrt();
    let panels = (p2.max(p3).ceil() as usize).max(64);
    let h = 1.0 / panels as f64;
    let hw = 0.5 * h;
    let nodes = lobatto_nodes();
    let vinv = inverse_vandermonde();

    let sum: Complex64 = (0..panels)
        .into_par_iter()
        .map(|p| {
            let xm = (p as f64 + 0.5) * h;
            let vm = field.eval(xm);
            // Symmetric secant slope in tau units keeps the endpoint phase
            // deviations equal and small.
            let c = TAU * s * (field.eval(xm + hw) - field.eval(xm - hw)) / 2.0;
            let mut g = [Complex64::new(0.0, 0.0); FILON_DEG + 1];
            for (j, &tau) in nodes.iter().enumerate() {
                let x = xm + hw * tau;
                let dev = TAU * s * (field.eval(x) - vm) - c * tau;
                let amp = weight.map_or(1.0, |w| w(x));
                g[j] = amp * Complex64::cis(dev);
            }
            let moments = filon_moments(c);
            let mut acc = Complex64::new(0.0, 0.0);
            for (row, moment) in vinv.iter().zip(moments.iter()) {
                let mut coeff = Complex64::new(0.0, 0.0);
                for (v, gj) in row.iter().zip(g.iter()) {
                    coeff += v * gj;
                }
                acc += coeff * moment;
            }
            hw * Complex64::cis(TAU * s * vm) * acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    sum
}

/// Envelope fit of `|oscillatory_integral|` over a geometric `t` grid;
/// compare the result with `1/l` from the declared critical orders.
pub fn phase_decay_order(
    field: &VelocityField1D,
    xi: i64,
    t_grid: &[f64],
    quad: QuadMode,
) -> Result<DecayEstimate, PhaseError> {
    if t_grid.len() < 24
        || t_grid[0] <= 0.0
        || t_grid[t_grid.len() - 1] / t_grid[0] < 4.0
        || t_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(PhaseError::BadGrid(24));
    }
    let samples: Vec<(f64, f64)> = t_grid
        .par_iter()
        .map(|&t| Ok((t, oscillatory_integral(field, xi, t, quad)?.norm())))
        .collect::<Result<_, PhaseError>>()?;
    let blocks = (t_grid.len() / 8).clamp(8, 16);
    Ok(decay::envelope_fit(&samples, blocks)?)
}

/// Result of a critical-point scan.
#[derive(Debug, Clone, PartialEq)]
pub enum ScanResult {
    Points(Vec<CriticalPoint>),
    /// The derivative vanishes on the whole grid (constant field).
    DegenerateEverywhere,
}

/// Locate critical points of `xi * v` by sign changes of the
/// finite-difference derivative on a circular grid, refine each root by
/// bisection to width 1e-10, and estimate orders from successive
/// finite-difference derivatives against their grid scales.
///
/// The scalar `xi` does not move critical points in one dimension; it is
/// validated and otherwise only flips signs.
pub fn critical_points_scan(
    field: &VelocityField1D,
    xi: i64,
    grid_size: usize,
) -> Result<ScanResult, PhaseError> {
    if xi == 0 {
        return Err(PhaseError::XiZero);
    }
    if field.smoothness() < 2 {
        return Err(PhaseError::NotSmoothEnough);
    }
    let grid_size = grid_size.max(2);
    let h_fd = 1e-5;
    let d1 = |x: f64| central_fd(&|u| field.eval(u), x, 1, h_fd) * xi as f64;

    let v_scale = (0..512)
        .map(|i| field.eval(i as f64 / 512.0).abs())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let slope_scale = (0..2048)
        .map(|i| d1(i as f64 / 2048.0).abs())
        .fold(0.0f64, f64::max);
    if slope_scale < 1e-10 * v_scale {
        return Ok(ScanResult::DegenerateEverywhere);
    }
    let zero_tol = 1e-9 * slope_scale;

    let mut roots: Vec<f64> = Vec::new();
    let cell_w = 1.0 / grid_size as f64;
    const SUB: usize = 8;
    for cell in 0..grid_size {
        let a = cell as f64 * cell_w;
        // Sub-sample the derivative. The contract is one critical point per
        // cell: several node zeros or sign changes inside a cell mean the
        // grid cannot separate them.
        let mut pts = Vec::with_capacity(SUB + 1);
        for j in 0..=SUB {
            let x = a + cell_w * j as f64 / SUB as f64;
            pts.push((x, d1(x)));
        }
        let mut changes = Vec::new();
        let mut node_zeros = 0usize;
        let mut last_sign = 0i8;
        let mut last_x = a;
        for (j, &(x, v)) in pts.iter().enumerate() {
            let sign = if v.abs() <= zero_tol {
                0
            } else if v > 0.0 {
                1
            } else {
                -1
            };
            if sign == 0 {
                // The right endpoint belongs to the next cell.
                if j < SUB {
                    roots.push(x);
                    node_zeros += 1;
                }
            } else {
                if last_sign != 0 && sign != last_sign {
                    changes.push((last_x, x));
                }
                last_sign = sign;
                last_x = x;
            }
        }
        if node_zeros + changes.len() >= 2 {
            return Err(PhaseError::RefinementRequired {
                cell,
                suggested: grid_size * 4,
            });
        }
        if let Some(&(mut lo, mut hi)) = changes.first() {
            let f_lo = d1(lo);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                let f_mid = d1(mid);
                if f_mid == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (f_mid > 0.0) == (f_lo > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }

    // Circular dedup; a root at the wrap shows up near both 0 and 1.
    let mut norm: Vec<f64> = roots
        .iter()
        .map(|&r| {
            let r = r.rem_euclid(1.0);
            if r > 1.0 - 1e-8 {
                0.0
            } else {
                r
            }
        })
        .collect();
    norm.sort_by(|a, b| a.total_cmp(b));
    norm.dedup_by(|a, b| (*a - *b).abs() < 1e-7);

    let max_order = (field.smoothness() - 1).min(4);
    let mut points = Vec::with_capacity(norm.len());
    for loc in norm {
        let mut order = 0u32;
        for m in 1..=max_order {
            let scale = field.derivative_scale(m);
            if field.fd_derivative(loc, m).abs() <= 1e-3 * scale {
                order = m;
            } else {
                break;
            }
        }
        if order == 0 {
            // Sub-threshold slope wobble, not a critical point.
            continue;
        }
        points.push(CriticalPoint {
            location: loc,
            order,
        });
    }
    Ok(ScanResult::Points(points))
}

/// Wrapping behavior of the push-forward of `xi * v(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrap {
    /// Real-valued push-forward on R.
    None,
    /// Torus-valued push-forward with the zero fiber removed: samples with
    /// `xi * v(x)` within [`ZERO_FIBER_EPS`] of an integer are discarded and
    /// the mean renormalizes over the retained set.
    Mod1,
}

/// The law of `xi * v(x)` with `x ~ base`.
#[derive(Debug, Clone)]
pub struct PushforwardSpec {
    pub base: Measure1D,
    pub field: VelocityField1D,
    pub xi: i64,
    pub wrap: Wrap,
}

impl PushforwardSpec {
    pub fn new(
        base: Measure1D,
        field: VelocityField1D,
        xi: i64,
        wrap: Wrap,
    ) -> Result<Self, PhaseError> {
        if xi == 0 {
            return Err(PhaseError::XiZero);
        }
        Ok(PushforwardSpec {
            base,
            field,
            xi,
            wrap,
        })
    }
}

const MC_CHUNK: usize = 1 << 14;

/// Monte-Carlo estimate `(mean, stderr)` of the push-forward transform
/// `integral exp(2 i pi t s) dm(s)`.
pub fn pushforward_char(
    spec: &PushforwardSpec,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(Complex64, f64), PhaseError> {
    if !t.is_finite() {
        return Err(PhaseError::BadTime(t));
    }
    if n_samples == 0 {
        return Err(PhaseError::DegenerateSpec);
    }
    let chunks: Vec<(u64, usize)> = (0..n_samples.div_ceil(MC_CHUNK))
        .map(|i| (i as u64, MC_CHUNK.min(n_samples - i * MC_CHUNK)))
        .collect();
    let partials: Vec<(Complex64, f64, usize)> = chunks
        .par_iter()
        .map(|&(stream, len)| {
            let mut rng = rng::stream(seed, stream + 1);
            let mut xs = Vec::with_capacity(len);
            spec.base.sample_into(&mut rng, len, &mut xs);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sumsq = 0.0;
            let mut kept = 0usize;
            for &x in &xs {
                let s = spec.xi as f64 * spec.field.eval(x);
                let s = match spec.wrap {
                    Wrap::None => s,
                    Wrap::Mod1 => {
                        let frac = s.rem_euclid(1.0);
                        if frac < ZERO_FIBER_EPS || 1.0 - frac < ZERO_FIBER_EPS {
                            continue;
                        }
                        frac
                    }
                };
                let v = Complex64::cis(TAU * t * s);
                sum += v;
                sumsq += v.norm_sqr();
                kept += 1;
            }
            (sum, sumsq, kept)
        })
        .collect();
    let (sum, sumsq, kept) = partials.iter().fold(
        (Complex64::new(0.0, 0.0), 0.0, 0usize),
        |(s, q, k), &(ps, pq, pk)| (s + ps, q + pq, k + pk),
    );
    if kept == 0 {
        return Err(PhaseError::DegenerateSpec);
    }
    let n = kept as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean.norm_sqr()).max(0.0);
    Ok((mean, (var / n).sqrt()))
}
