//! Finite trigonometric polynomials on the 2-torus.
//!
//! Observables are kept as sparse coefficient maps so spectral sums scale
//! with the support size, never with a grid. Dense grids appear only inside
//! verification quadrature in the tests.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::measure::Measure1D;

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum ObservableError {
    #[error("invariant algebra exceeds fiber projection")]
    AtomicBase,
    #[error("empirical base measures are not accepted by the invariant projection")]
    EmpiricalBase,
    #[error("coefficient csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A finitely supported Fourier series
/// `f(x, y) = sum coeffs[(k1, k2)] * exp(2 i pi (k1 x + k2 y))`.
///
/// Coefficients are ordered (`BTreeMap`) so every iteration, sum and CSV
/// serialization of the same polynomial is bit-identical.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigPoly2 {
    coeffs: BTreeMap<(i64, i64), Complex64>,
}

impl TrigPoly2 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_coeffs(iter: impl IntoIterator<Item = ((i64, i64), Complex64)>) -> Self {
        let mut p = Self::new();
        for (k, c) in iter {
            p.add_coeff(k, c);
        }
        p
    }

    /// Single mode `exp(2 i pi (k1 x + k2 y))`.
    pub fn mode(k1: i64, k2: i64) -> Self {
        Self::from_coeffs([((k1, k2), Complex64::new(1.0, 0.0))])
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_coeffs([((0, 0), c)])
    }

    /// Accumulate a coefficient; exact zeros are pruned so the support stays
    /// meaningful.
    pub fn add_coeff(&mut self, k: (i64, i64), c: Complex64) {
        let entry = self.coeffs.entry(k).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if entry.re == 0.0 && entry.im == 0.0 {
            self.coeffs.remove(&k);
        }
    }

    pub fn coeff(&self, k: (i64, i64)) -> Complex64 {
        self.coeffs
            .get(&k)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(i64, i64), &Complex64)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Max sup-norm of the support indices.
    pub fn support_radius(&self) -> i64 {
        self.coeffs
            .keys()
            .map(|&(k1, k2)| k1.abs().max(k2.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(&(k1, k2), &c)| c * Complex64::cis(TAU * (k1 as f64 * x + k2 as f64 * y)))
            .sum()
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|(&k, &c)| (k, a * c)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&k, &c) in other.iter() {
            out.add_coeff(k, c);
        }
        out
    }

    /// Sobolev `H^s` norm: `(sum |c|^2 (1 + |k|^2)^s)^{1/2}`.
    pub fn hs_norm(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&(k1, k2), c)| {
                let k2norm = (k1 * k1 + k2 * k2) as f64;
                c.norm_sqr() * (1.0 + k2norm).powf(s)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Anisotropic `H^{s,0}` norm with weight `h(k) = (1 + k1^2/k2^2)^{1/2}`
    /// for `k2 != 0` and `h = 1` on the axis `k2 = 0`.
    pub fn hs0_norm(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&(k1, k2), c)| {
                let h2 = if k2 == 0 {
                    1.0
                } else {
                    1.0 + (k1 as f64 / k2 as f64).powi(2)
                };
                c.norm_sqr() * h2.powf(s)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `C_f = max |c_k| (1 + |k|^2)^{s/2}` over the support; 0 for the zero
    /// polynomial.
    pub fn cf_constant(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&(k1, k2), c)| {
                let k2norm = (k1 * k1 + k2 * k2) as f64;
                c.norm() * (1.0 + k2norm).powf(s / 2.0)
            })
            .fold(0.0, f64::max)
    }

    /// CSV rows `k1,k2,re,im`, sorted by index.
    pub fn write_csv(&self, mut w: impl Write) -> Result<(), ObservableError> {
        writeln!(w, "k1,k2,re,im")?;
        for (&(k1, k2), c) in &self.coeffs {
            writeln!(w, "{},{},{},{}", k1, k2, c.re, c.im)?;
        }
        Ok(())
    }

    pub fn read_csv(r: impl BufRead) -> Result<Self, ObservableError> {
        let mut out = Self::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("k1")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(ObservableError::Csv {
                    line: i + 1,
                    msg: format!("expected 4 fields, got {}", fields.len()),
                });
            }
            let parse_i = |s: &str| {
                s.parse::<i64>().map_err(|e| ObservableError::Csv {
                    line: i + 1,
                    msg: format!("bad index `{s}`: {e}"),
                })
            };
            let parse_f = |s: &str| {
                s.parse::<f64>().map_err(|e| ObservableError::Csv {
                    line: i + 1,
                    msg: format!("bad value `{s}`: {e}"),
                })
            };
            out.add_coeff(
                (parse_i(fields[0])?, parse_i(fields[1])?),
                Complex64::new(parse_f(fields[2])?, parse_f(fields[3])?),
            );
        }
        Ok(out)
    }
}

/// Sobolev metadata of an observable at regularity `s`.
#[derive(Debug, Clone, Copy)]
pub struct SobolevMeta {
    pub s: f64,
    pub norm_hs: f64,
    pub c_f: f64,
}

impl SobolevMeta {
    pub fn of(f: &TrigPoly2, s: f64) -> Self {
        SobolevMeta {
            s,
            norm_hs: f.hs_norm(s),
            c_f: f.cf_constant(s),
        }
    }
}

/// Projection onto the invariant algebra of the transvection / linear flow
/// with a nonatomic base: only the `k2 = 0` modes survive, since
/// `k2 * x` is an integer only on a base-null set. The result is
/// `E(f | I)` as a function of `x` alone.
///
/// Atomic bases are rejected: atoms at rationals create extra invariant
/// modes that a fiber projection cannot see. Empirical bases are rejected
/// for the same reason (every sample is a float rational).
pub fn conditional_expectation(
    f: &TrigPoly2,
    base: &Measure1D,
) -> Result<TrigPoly2, ObservableError> {
    match base {
        Measure1D::Atomic { .. } => return Err(ObservableError::AtomicBase),
        Measure1D::Empirical { .. } => return Err(ObservableError::EmpiricalBase),
        _ => {}
    }
    Ok(TrigPoly2::from_coeffs(
        f.iter()
            .filter(|(&(_, k2), _)| k2 == 0)
            .map(|(&k, &c)| (k, c)),
    ))
}

/// Random polynomial with `|c_k| = (1 + |k|^2)^(-s/2 - 0.51)` and uniform
/// phases on the box `|k1|, |k2| <= radius`: lies in `H^s` with norm
/// independent of the support radius (the `0.51` makes the square sum
/// converge).
pub fn random_hs_poly(radius: i64, s: f64, rng: &mut impl Rng) -> TrigPoly2 {
    let mut p = TrigPoly2::new();
    for k1 in -radius..=radius {
        for k2 in -radius..=radius {
            let mag = (1.0 + (k1 * k1 + k2 * k2) as f64).powf(-s / 2.0 - 0.51);
            let phase = rng.random::<f64>() * TAU;
            p.add_coeff((k1, k2), mag * Complex64::cis(phase));
        }
    }
    p
}

/// Random polynomial normalized to `H^{s,0}` norm 1, coefficient profile
/// `h(k)^-s (1 + |k|^2)^(-0.51)` with uniform phases.
pub fn random_hs0_unit_poly(radius: i64, s: f64, rng: &mut impl Rng) -> TrigPoly2 {
    let mut p = TrigPoly2::new();
    for k1 in -radius..=radius {
        for k2 in -radius..=radius {
            let h2 = if k2 == 0 {
                1.0
            } else {
                1.0 + (k1 as f64 / k2 as f64).powi(2)
            };
            let mag = h2.powf(-s / 2.0) * (1.0 + (k1 * k1 + k2 * k2) as f64).powf(-0.51);
            let phase = rng.random::<f64>() * TAU;
            p.add_coeff((k1, k2), mag * Complex64::cis(phase));
        }
    }
    let norm = p.hs0_norm(s);
    p.scale(Complex64::new(1.0 / norm, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    #[test]
    fn hs_norm_examples() {
        let one = TrigPoly2::constant(Complex64::new(1.0, 0.0));
        assert!((one.hs_norm(3.0) - 1.0).abs() < 1e-15);

        // Single mode at (0, 1), s = 2: norm = (1 * (1+1)^2)^{1/2} = 2.
        let ey = TrigPoly2::mode(0, 1);
        assert!((ey.hs_norm(2.0) - 2.0).abs() < 1e-15);

        // Modes at (1,0) and (0,1), s = 2: norm = sqrt(4 + 4) = sqrt 8.
        let p = TrigPoly2::from_coeffs([
            ((1, 0), Complex64::new(1.0, 0.0)),
            ((0, 1), Complex64::new(1.0, 0.0)),
        ]);
        assert!((p.hs_norm(2.0) - 8.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn cf_examples() {
        assert_eq!(TrigPoly2::new().cf_constant(2.0), 0.0);
        // Single mode (1,1), s = 2: (1 + 2)^1 = 3.
        assert!((TrigPoly2::mode(1, 1).cf_constant(2.0) - 3.0).abs() < 1e-14);
        // 2 e(x) + e(3x), s = 1: max(2 sqrt2, sqrt10) = sqrt10 ~ 3.162.
        let p = TrigPoly2::from_coeffs([
            ((1, 0), Complex64::new(2.0, 0.0)),
            ((3, 0), Complex64::new(1.0, 0.0)),
        ]);
        assert!((p.cf_constant(1.0) - 10.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn conditional_expectation_examples() {
        let base = Measure1D::uniform();
        // Pure fiber mode dies.
        let ef = conditional_expectation(&TrigPoly2::mode(0, 1), &base).unwrap();
        assert!(ef.is_empty());
        // A function of x alone is untouched.
        let gx = TrigPoly2::from_coeffs([
            ((1, 0), Complex64::new(0.3, 0.7)),
            ((-2, 0), Complex64::new(1.0, 0.0)),
        ]);
        assert_eq!(conditional_expectation(&gx, &base).unwrap(), gx);
        // Mixed: e(x) + e(x+y) -> e(x).
        let f = TrigPoly2::from_coeffs([
            ((1, 0), Complex64::new(1.0, 0.0)),
            ((1, 1), Complex64::new(1.0, 0.0)),
        ]);
        assert_eq!(
            conditional_expectation(&f, &base).unwrap(),
            TrigPoly2::mode(1, 0)
        );
    }

    #[test]
    fn conditional_expectation_matches_orbit_average() {
        // E(f|I)(x) should match Birkhoff averages over the fiber rotation
        // by an irrational angle.
        let base = Measure1D::bernoulli(2.5).unwrap();
        let mut rng = rng::seeded(4);
        let f = random_hs_poly(3, 2.0, &mut rng);
        let ef = conditional_expectation(&f, &base).unwrap();
        let alpha = 2.0f64.sqrt() - 1.0;
        for &(x, y) in &[(0.21, 0.9), (0.5, 0.05), (0.77, 0.33)] {
            let mut avg = Complex64::new(0.0, 0.0);
            let j_max = 10_000;
            for j in 0..j_max {
                avg += f.eval(x, y + j as f64 * alpha);
            }
            avg /= j_max as f64;
            let gap = (avg - ef.eval(x, 0.0)).norm();
            assert!(gap < 5e-3, "gap = {gap}");
        }
    }

    #[test]
    fn conditional_expectation_rejects_atomic_and_empirical() {
        let f = TrigPoly2::mode(1, 1);
        let atomic = Measure1D::atomic(vec![(0.5, 1.0)]).unwrap();
        let err = conditional_expectation(&f, &atomic).unwrap_err();
        assert!(err.to_string().contains("invariant algebra"));
        let emp = Measure1D::empirical(vec![0.1]).unwrap();
        assert!(conditional_expectation(&f, &emp).is_err());
    }

    #[test]
    fn projection_idempotent_and_contractive() {
        let base = Measure1D::uniform();
        let mut rng = rng::seeded(7);
        for _ in 0..20 {
            let f = random_hs_poly(4, 1.5, &mut rng);
            let ef = conditional_expectation(&f, &base).unwrap();
            let eef = conditional_expectation(&ef, &base).unwrap();
            assert_eq!(ef, eef);
            assert!(ef.hs_norm(0.0) <= f.hs_norm(0.0) + 1e-15);
        }
    }

    #[test]
    fn projection_self_adjoint_under_quadrature() {
        // <E(f|I), g> = <f, E(g|I)> for mu (x) lambda, evaluated by blunt
        // tensor quadrature (Gauss-Legendre in x per density cell, uniform
        // in y), not by the spectral identity.
        let base = Measure1D::density_from_fn(64, |x| 1.0 + 0.6 * (TAU * x).cos()).unwrap();
        let values = match &base {
            Measure1D::DensityGrid { values } => values.clone(),
            _ => unreachable!(),
        };
        let gl = [
            (-0.8611363115940526, 0.34785484513745385),
            (-0.3399810435848563, 0.6521451548625461),
            (0.3399810435848563, 0.6521451548625461),
            (0.8611363115940526, 0.34785484513745385),
        ];
        let inner = |u: &TrigPoly2, v: &TrigPoly2| -> Complex64 {
            let cells = values.len();
            let y_pts = 64usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..cells {
                let a = j as f64 / cells as f64;
                let h = 1.0 / cells as f64;
                for &(node, w) in &gl {
                    let x = a + h * 0.5 * (node + 1.0);
                    let mut fiber = Complex64::new(0.0, 0.0);
                    for m in 0..y_pts {
                        let y = (m as f64 + 0.5) / y_pts as f64;
                        fiber += u.eval(x, y).conj() * v.eval(x, y);
                    }
                    acc += values[j] * w * 0.5 * h * fiber / y_pts as f64;
                }
            }
            acc
        };
        let mut rng = rng::seeded(11);
        for _ in 0..20 {
            let f = random_hs_poly(3, 1.2, &mut rng);
            let g = random_hs_poly(3, 1.2, &mut rng);
            let ef = conditional_expectation(&f, &base).unwrap();
            let eg = conditional_expectation(&g, &base).unwrap();
            let lhs = inner(&ef, &g);
            let rhs = inner(&f, &eg);
            assert!((lhs - rhs).norm() < 1e-8, "gap = {}", (lhs - rhs).norm());
        }
    }

    #[test]
    fn coefficients_recovered_by_grid_inversion() {
        let mut rng = rng::seeded(5);
        let f = random_hs_poly(4, 1.0, &mut rng);
        let g = 2 * (f.support_radius() as usize + 1);
        let n = 2 * g;
        for &k in f.iter().map(|(k, _)| k).collect::<Vec<_>>().iter() {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    let (x, y) = (a as f64 / n as f64, b as f64 / n as f64);
                    acc += f.eval(x, y)
                        * Complex64::cis(-TAU * (k.0 as f64 * x + k.1 as f64 * y));
                }
            }
            acc /= (n * n) as f64;
            assert!((acc - f.coeff(*k)).norm() < 1e-10);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let mut rng = rng::seeded(6);
        let f = random_hs_poly(2, 1.0, &mut rng);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = TrigPoly2::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(f, back);
    }

    proptest! {
        #[test]
        fn hs_norm_monotone_in_s(s1 in 0.0f64..3.0, ds in 0.0f64..3.0, seed in 0u64..500) {
            let mut rng = rng::seeded(seed);
            let f = random_hs_poly(3, 1.0, &mut rng);
            prop_assert!(f.hs_norm(s1 + ds) >= f.hs_norm(s1) - 1e-12);
        }
    }
}
