//! Rotation-group bundles over the circle.
//!
//! The flows are `(x, M) -> (x, exp(t A(x)) M)` on `T x SO(3)` (and the
//! quaternion double cover for SU(2)) with a fixed rotation axis and an
//! `x`-dependent angular speed, carrying `base (x) Haar`. For fixed-axis
//! generators the orbit closure in the group is a circle, and the covariance
//! of matrix coefficients reduces to Fourier coefficients of the push-forward
//! of the angular speed: Haar second moments are `delta/3` for SO(3) and
//! `delta/4` for the quaternion components, so
//!
//! ```text
//!   E[ M_ij (R(theta(x)) M)_kl ] = delta_jl E_x[ R(theta(x))_ki ] / 3
//! ```
//!
//! and `E_x[R]` is built from `E cos(theta)`, `E sin(theta)`, i.e. from the
//! transform of the push-forward of `omega(x)/2pi` at `t` (at `t/2` on the
//! double cover).

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::measure::Measure1D;
use crate::phase::{
    oscillatory_integral_weighted, PhaseError, PushforwardSpec, QuadMode, VelocityField1D, Wrap,
};
use crate::rng;

const TAU: f64 = std::f64::consts::TAU;

pub type Mat3 = [[f64; 3]; 3];
/// Quaternion `(w, x, y, z)`, unit norm.
pub type Quat = [f64; 4];

#[derive(Debug, Error)]
pub enum LieError {
    #[error("rotation axis must have nonzero length")]
    ZeroAxis,
    #[error("rotation speed must be finite and nonnegative")]
    BadSpeed,
    #[error("matrix coefficient indices out of range for the group")]
    BadIndices,
    #[error("varying-axis generator fields have no circle reduction")]
    VaryingAxisUnsupported,
    #[error("need at least one sample")]
    NoSamples,
    #[error(transparent)]
    Phase(#[from] PhaseError),
}

/// Fixed rotation generator `A = omega [axis]_x` (antisymmetric).
#[derive(Debug, Clone, Copy)]
pub struct RotationGenerator {
    axis: [f64; 3],
    speed: f64,
}

impl RotationGenerator {
    pub fn new(axis: [f64; 3], speed: f64) -> Result<Self, LieError> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(norm > 1e-12) || !norm.is_finite() {
            return Err(LieError::ZeroAxis);
        }
        if !(speed >= 0.0) || !speed.is_finite() {
            return Err(LieError::BadSpeed);
        }
        Ok(RotationGenerator {
            axis: [axis[0] / norm, axis[1] / norm, axis[2] / norm],
            speed,
        })
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }
}

/// Rodrigues formula: `exp(t A) = I + sin(theta) K + (1 - cos(theta)) K^2`
/// with `theta = omega t` and `K = [axis]_x`.
pub fn rodrigues_exp(gen: &RotationGenerator, t: f64) -> Mat3 {
    rotation_about(gen.axis, gen.speed * t)
}

fn rotation_about(u: [f64; 3], theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    let k = hat(u);
    let k2 = mat_mul(&k, &k);
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 } else { 0.0 };
            r[i][j] = id + s * k[i][j] + (1.0 - c) * k2[i][j];
        }
    }
    r
}

fn hat(u: [f64; 3]) -> Mat3 {
    [
        [0.0, -u[2], u[1]],
        [u[2], 0.0, -u[0]],
        [-u[1], u[0], 0.0],
    ]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|m| a[i][m] * b[m][j]).sum();
        }
    }
    out
}

fn quat_to_matrix(q: Quat) -> Mat3 {
    let [w, x, y, z] = q;
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

fn quat_mul(a: Quat, b: Quat) -> Quat {
    let [aw, ax, ay, az] = a;
    let [bw, bx, by, bz] = b;
    [
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ]
}

fn haar_quat(rng: &mut impl Rng) -> Quat {
    loop {
        let q: Quat = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        if n > 1e-12 {
            return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
        }
    }
}

/// `n` Haar-uniform rotation matrices (uniform unit quaternions mapped to
/// SO(3)), deterministic in the seed.
pub fn haar_sample_so3(seed: u64, n: usize) -> Vec<Mat3> {
    let mut rng = rng::seeded(seed);
    (0..n).map(|_| quat_to_matrix(haar_quat(&mut rng))).collect()
}

/// Angular speed law `omega(x)`.
#[derive(Clone)]
pub enum SpeedLaw {
    Constant(f64),
    /// `omega(x) = 2 pi v(x)` for a circle velocity field `v`.
    TwoPiTimes(VelocityField1D),
}

impl std::fmt::Debug for SpeedLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpeedLaw::Constant(c) => write!(f, "Constant({c})"),
            SpeedLaw::TwoPiTimes(v) => write!(f, "2pi*{}", v.name()),
        }
    }
}

impl SpeedLaw {
    pub fn omega(&self, x: f64) -> f64 {
        match self {
            SpeedLaw::Constant(c) => *c,
            SpeedLaw::TwoPiTimes(v) => TAU * v.eval(x),
        }
    }
}

/// Axis assignment along the base circle.
#[derive(Clone)]
pub enum AxisLaw {
    Fixed([f64; 3]),
    Varying(Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>),
}

impl std::fmt::Debug for AxisLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisLaw::Fixed(a) => write!(f, "Fixed({a:?})"),
            AxisLaw::Varying(_) => write!(f, "Varying(..)"),
        }
    }
}

/// `x`-dependent rotation generator.
#[derive(Debug, Clone)]
pub struct GeneratorField {
    pub axis: AxisLaw,
    pub law: SpeedLaw,
}

impl GeneratorField {
    pub fn fixed_axis(axis: [f64; 3], law: SpeedLaw) -> Result<Self, LieError> {
        RotationGenerator::new(axis, 0.0)?;
        Ok(GeneratorField {
            axis: AxisLaw::Fixed(axis),
            law,
        })
    }

    fn axis_at(&self, x: f64) -> [f64; 3] {
        match &self.axis {
            AxisLaw::Fixed(a) => *a,
            AxisLaw::Varying(f) => f(x),
        }
    }

    /// The rotation generator at base point `x`; negative speeds flip the
    /// axis so the stored speed stays nonnegative.
    pub fn generator_at(&self, x: f64) -> Result<RotationGenerator, LieError> {
        let omega = self.law.omega(x);
        let axis = self.axis_at(x);
        if omega < 0.0 {
            RotationGenerator::new([-axis[0], -axis[1], -axis[2]], -omega)
        } else {
            RotationGenerator::new(axis, omega)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LieGroup {
    So3,
    /// Quaternion double cover; observables pick quaternion components via
    /// index pairs `(i, j) -> component 2 i + j` in `(w, x, y, z)` order.
    Su2,
}

/// A compatible flow on `T x G` with `base (x) Haar` and matrix-coefficient
/// observables `F1 = coeff(M, obs1)`, `F2 = coeff(g_t M, obs2)`.
#[derive(Debug, Clone)]
pub struct LieFlowSpec {
    pub group: LieGroup,
    pub base: Measure1D,
    pub field: GeneratorField,
    pub obs1: (usize, usize),
    pub obs2: (usize, usize),
}

impl LieFlowSpec {
    pub fn new(
        group: LieGroup,
        base: Measure1D,
        field: GeneratorField,
        obs1: (usize, usize),
        obs2: (usize, usize),
    ) -> Result<Self, LieError> {
        let max = match group {
            LieGroup::So3 => 3,
            LieGroup::Su2 => 2,
        };
        for (i, j) in [obs1, obs2] {
            if i >= max || j >= max {
                return Err(LieError::BadIndices);
            }
        }
        Ok(LieFlowSpec {
            group,
            base,
            field,
            obs1,
            obs2,
        })
    }
}

/// Monte-Carlo covariance of the flow observables at time `t`, with the
/// analytic circle-reduction prediction when the axis is fixed.
#[derive(Debug, Clone)]
pub struct LieCov {
    pub mc: Complex64,
    pub stderr: f64,
    pub predicted: Option<Complex64>,
}

const MC_CHUNK: usize = 1 << 14;

pub fn lie_cov_mc(
    spec: &LieFlowSpec,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<LieCov, LieError> {
    if n_samples == 0 {
        return Err(LieError::NoSamples);
    }
    let chunks: Vec<(u64, usize)> = (0..n_samples.div_ceil(MC_CHUNK))
        .map(|i| (i as u64, MC_CHUNK.min(n_samples - i * MC_CHUNK)))
        .collect();
    let partials: Vec<[f64; 4]> = chunks
        .par_iter()
        .map(|&(stream, len)| {
            let mut rng = rng::stream(seed, stream + 1);
            let mut xs = Vec::with_capacity(len);
            spec.base.sample_into(&mut rng, len, &mut xs);
            let mut s12 = 0.0;
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            let mut q12 = 0.0;
            for &x in &xs {
                let q = haar_quat(&mut rng);
                let (f1, f2) = match spec.group {
                    LieGroup::So3 => {
                        let m = quat_to_matrix(q);
                        let gen = spec.field.generator_at(x).expect("validated field");
                        let r = rodrigues_exp(&gen, t);
                        let rm = mat_mul(&r, &m);
                        (m[spec.obs1.0][spec.obs1.1], rm[spec.obs2.0][spec.obs2.1])
                    }
                    LieGroup::Su2 => {
                        let theta = spec.field.law.omega(x) * t;
                        let axis = RotationGenerator::new(spec.field.axis_at(x), 1.0)
                            .expect("validated field")
                            .axis();
                        let (sh, ch) = (theta / 2.0).sin_cos();
                        let g = [ch, sh * axis[0], sh * axis[1], sh * axis[2]];
                        let gp = quat_mul(g, q);
                        (
                            q[2 * spec.obs1.0 + spec.obs1.1],
                            gp[2 * spec.obs2.0 + spec.obs2.1],
                        )
                    }
                };
                s12 += f1 * f2;
                s1 += f1;
                s2 += f2;
                q12 += (f1 * f2) * (f1 * f2);
            }
            [s12, s1, s2, q12]
        })
        .collect();
    let total = partials.iter().fold([0.0; 4], |acc, p| {
        [acc[0] + p[0], acc[1] + p[1], acc[2] + p[2], acc[3] + p[3]]
    });
    let n = n_samples as f64;
    let mean12 = total[0] / n;
    let cov = mean12 - (total[1] / n) * (total[2] / n);
    let var = (total[3] / n - mean12 * mean12).max(0.0);
    let predicted = predicted_cov(spec, t)?;
    Ok(LieCov {
        mc: Complex64::new(cov, 0.0),
        stderr: (var / n).sqrt(),
        predicted,
    })
}

/// Transform of the push-forward of `omega(x)/2pi` under the base measure,
/// evaluated deterministically where the base has an explicit density or
/// atoms, by a seeded Monte-Carlo fallback otherwise.
fn reduced_transform(spec: &LieFlowSpec, t: f64) -> Result<Complex64, LieError> {
    match &spec.field.law {
        SpeedLaw::Constant(c) => Ok(Complex64::cis(c * t)),
        SpeedLaw::TwoPiTimes(v) => match &spec.base {
            Measure1D::Atomic { atoms } => Ok(atoms
                .iter()
                .map(|&(x, w)| w * Complex64::cis(TAU * t * v.eval(x)))
                .sum()),
            Measure1D::UniformTorus => {
                Ok(oscillatory_integral_weighted(v, 1, t.abs(), QuadMode::Auto, None)
                    .map(|z| if t < 0.0 { z.conj() } else { z })?)
            }
            Measure1D::DensityGrid { values } => {
                let values = values.clone();
                let cells = values.len() as f64;
                let dens =
                    move |x: f64| values[((x * cells) as usize).min(values.len() - 1)];
                Ok(oscillatory_integral_weighted(
                    v,
                    1,
                    t.abs(),
                    QuadMode::Auto,
                    Some(&dens),
                )
                .map(|z| if t < 0.0 { z.conj() } else { z })?)
            }
            other => {
                let pf = PushforwardSpec::new(other.clone(), v.clone(), 1, Wrap::None)?;
                Ok(crate::phase::pushforward_char(&pf, t, 200_000, 0xD1CE)?.0)
            }
        },
    }
}

/// Fixed-axis analytic prediction of the covariance; `None` for varying
/// axes.
fn predicted_cov(spec: &LieFlowSpec, t: f64) -> Result<Option<Complex64>, LieError> {
    let AxisLaw::Fixed(axis) = spec.field.axis else {
        return Ok(None);
    };
    let u = RotationGenerator::new(axis, 0.0)?.axis();
    Ok(Some(match spec.group {
        LieGroup::So3 => {
            let (i, j) = spec.obs1;
            let (k, l) = spec.obs2;
            if j != l {
                Complex64::new(0.0, 0.0)
            } else {
                let nu = reduced_transform(spec, t)?;
                let (ec, es) = (nu.re, nu.im);
                let kk = hat(u);
                let id = if k == i { 1.0 } else { 0.0 };
                let r_ki = u[k] * u[i] * (1.0 - ec) + id * ec + kk[k][i] * es;
                Complex64::new(r_ki / 3.0, 0.0)
            }
        }
        LieGroup::Su2 => {
            // E[p_a (g p)_b] = E[L(g)]_{ba} / 4 and L is linear in g, so
            // plug the expected quaternion (E cos(theta/2), E sin(theta/2) u).
            let nu_half = reduced_transform(spec, t / 2.0)?;
            let g = [
                nu_half.re,
                nu_half.im * u[0],
                nu_half.im * u[1],
                nu_half.im * u[2],
            ];
            let l = left_mult_matrix(g);
            let a = 2 * spec.obs1.0 + spec.obs1.1;
            let b = 2 * spec.obs2.0 + spec.obs2.1;
            Complex64::new(l[b][a] / 4.0, 0.0)
        }
    }))
}

fn left_mult_matrix(g: Quat) -> [[f64; 4]; 4] {
    let [w, x, y, z] = g;
    [
        [w, -x, -y, -z],
        [x, w, -z, y],
        [y, z, w, -x],
        [z, -y, x, w],
    ]
}

/// Reduce a fixed-axis flow to the push-forward spec of `omega(x)/2pi`
/// (over `4pi` on the double cover) with `xi = 1` on the real line: the
/// measure whose Rajchman property decides shear for this bundle.
pub fn orbit_torus_reduce(spec: &LieFlowSpec) -> Result<PushforwardSpec, LieError> {
    let AxisLaw::Fixed(_) = spec.field.axis else {
        return Err(LieError::VaryingAxisUnsupported);
    };
    let cover = match spec.group {
        LieGroup::So3 => 1.0,
        LieGroup::Su2 => 0.5,
    };
    let field = match &spec.field.law {
        SpeedLaw::TwoPiTimes(v) => {
            if cover == 1.0 {
                v.clone()
            } else {
                v.scaled(cover)
            }
        }
        SpeedLaw::Constant(c) => {
            let w = c / TAU * cover;
            VelocityField1D::catalog(&format!("const:{w}"))?
        }
    };
    Ok(PushforwardSpec::new(
        spec.base.clone(),
        field,
        1,
        Wrap::None,
    )?)
}
