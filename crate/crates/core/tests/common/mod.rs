//! Shared oracles for the integration suites. Everything here is
//! deliberately independent of the library's numerical paths: fixed-point
//! big-integer arithmetic for special functions, literal tensor quadrature
//! for covariances.

use kepshear::measure::Measure1D;
use kepshear::observables::TrigPoly2;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};

const TAU: f64 = std::f64::consts::TAU;

/// Fixed-point real with 768 fractional bits on top of `BigInt`.
#[derive(Clone, Debug)]
pub struct Fx(BigInt);

impl Fx {
    pub const BITS: u32 = 768;

    pub fn zero() -> Self {
        Fx(BigInt::zero())
    }

    pub fn one() -> Self {
        Fx(BigInt::from(1) << Self::BITS)
    }

    pub fn from_f64(x: f64) -> Self {
        // Exact: scale the 53-bit mantissa.
        let (mant, exp, sign) = {
            let bits = x.to_bits();
            let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
            let exp = ((bits >> 52) & 0x7ff) as i64;
            let frac = bits & ((1u64 << 52) - 1);
            if exp == 0 {
                (frac, -1074i64, sign)
            } else {
                (frac | (1u64 << 52), exp - 1075, sign)
            }
        };
        let mut v = BigInt::from(mant) * sign;
        let shift = Self::BITS as i64 + exp;
        if shift >= 0 {
            v <<= shift as u32;
        } else {
            v >>= (-shift) as u32;
        }
        Fx(v)
    }

    pub fn to_f64(&self) -> f64 {
        let neg = self.0.is_negative();
        let mag = self.0.magnitude();
        let bits = mag.bits();
        let x = if bits <= 1000 {
            mag.to_f64().unwrap_or(0.0) / 2f64.powi(Self::BITS as i32)
        } else {
            let top = (mag >> (bits - 64)).to_f64().unwrap();
            top * 2f64.powi(bits as i32 - 64 - Self::BITS as i32)
        };
        if neg {
            -x
        } else {
            x
        }
    }

    pub fn add(&self, o: &Fx) -> Fx {
        Fx(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &Fx) -> Fx {
        Fx(&self.0 - &o.0)
    }

    pub fn neg(&self) -> Fx {
        Fx(-&self.0)
    }

    pub fn mul(&self, o: &Fx) -> Fx {
        Fx((&self.0 * &o.0) >> Self::BITS)
    }

    pub fn div_u64(&self, k: u64) -> Fx {
        Fx(&self.0 / BigInt::from(k))
    }

    pub fn shr(&self, k: u32) -> Fx {
        Fx(&self.0 >> k)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

/// `pi` by Machin's formula, `16 atan(1/5) - 4 atan(1/239)`, evaluated in
/// fixed point with exact integer divisions.
pub fn pi_fx() -> Fx {
    fn atan_inv(n: u64) -> Fx {
        let mut term = Fx::one().div_u64(n);
        let n2 = n * n;
        let mut sum = Fx::zero();
        let mut k = 0u64;
        loop {
            let contrib = term.div_u64(2 * k + 1);
            if contrib.is_zero() {
                break;
            }
            if k % 2 == 0 {
                sum = sum.add(&contrib);
            } else {
                sum = sum.sub(&contrib);
            }
            term = term.div_u64(n2);
            k += 1;
        }
        sum
    }
    let a = atan_inv(5);
    let b = atan_inv(239);
    Fx(( &a.0 * 16 ) - ( &b.0 * 4 ))
}

/// Bessel `J0(z)` by the alternating power series
/// `sum (-1)^m (z^2/4)^m / (m!)^2` in fixed point. The series terms grow to
/// ~exp(z) before they decay, which is exactly why this runs on big
/// integers: for z up to ~320 the peak needs ~460 bits.
pub fn bessel_j0(z: &Fx) -> f64 {
    let z2_over_4 = z.mul(z).shr(2);
    let mut term = Fx::one();
    let mut sum = Fx::one();
    let mut m = 1u64;
    while !term.is_zero() && m < 4000 {
        term = term.mul(&z2_over_4).div_u64(m * m);
        if m % 2 == 1 {
            sum = sum.sub(&term);
        } else {
            sum = sum.add(&term);
        }
        m += 1;
    }
    sum.to_f64()
}

/// `J0(2 pi t)` for f64 `t`.
pub fn bessel_j0_2pit(t: f64) -> f64 {
    let z = pi_fx().mul(&Fx::from_f64(2.0 * t));
    bessel_j0(&z)
}

/// Literal tensor quadrature of
/// `E[conj f1 . f2 o T^n] - E[conj E(f1|fiber) E(f2|fiber)]`
/// on a 512 x 512 grid: uniform midpoints in `y` (exact for these
/// polynomials), and in `x` midpoints for Lebesgue, 8-point Gauss panels per
/// density cell, or exact atom sums. Only pointwise evaluations of `f1`,
/// `f2` are used.
pub fn cov_quadrature_512(
    base: &Measure1D,
    f1: &TrigPoly2,
    f2: &TrigPoly2,
    n: f64,
) -> Complex64 {
    const Y: usize = 512;
    // Per-x fiber pass, with the y-exponentials folded row-wise so the
    // inner loop is a handful of complex multiplies.
    let rows = |f: &TrigPoly2, x: f64, shift: f64| -> Vec<(i64, Complex64)> {
        let mut map: std::collections::BTreeMap<i64, Complex64> = Default::default();
        for (&(k1, k2), &c) in f.iter() {
            let e = c * Complex64::cis(TAU * (k1 as f64 * x + k2 as f64 * shift));
            *map.entry(k2).or_insert(Complex64::new(0.0, 0.0)) += e;
        }
        map.into_iter().collect()
    };
    let fiber_term = |x: f64| -> Complex64 {
        let r1 = rows(f1, x, 0.0);
        let r2s = rows(f2, x, n * x);
        let r2 = rows(f2, x, 0.0);
        let mut cross = Complex64::new(0.0, 0.0);
        let mut m1 = Complex64::new(0.0, 0.0);
        let mut m2 = Complex64::new(0.0, 0.0);
        for b in 0..Y {
            let y = (b as f64 + 0.5) / Y as f64;
            let eval = |rows: &[(i64, Complex64)]| -> Complex64 {
                rows.iter()
                    .map(|&(k2, c)| c * Complex64::cis(TAU * k2 as f64 * y))
                    .sum()
            };
            let v1 = eval(&r1);
            cross += v1.conj() * eval(&r2s);
            m1 += v1;
            m2 += eval(&r2);
        }
        (cross - m1.conj() * m2 / Y as f64) / Y as f64
    };
    match base {
        Measure1D::Atomic { atoms } => atoms.iter().map(|&(x, w)| w * fiber_term(x)).sum(),
        Measure1D::UniformTorus => {
            const X: usize = 512;
            (0..X)
                .map(|a| fiber_term((a as f64 + 0.5) / X as f64))
                .sum::<Complex64>()
                / X as f64
        }
        Measure1D::DensityGrid { values } => {
            const GL8: [(f64, f64); 8] = [
                (-0.9602898564975363, 0.10122853629037626),
                (-0.7966664774136267, 0.22238103445337448),
                (-0.5255324099163290, 0.31370664587788727),
                (-0.1834346424956498, 0.36268378337836200),
                (0.1834346424956498, 0.36268378337836200),
                (0.5255324099163290, 0.31370664587788727),
                (0.7966664774136267, 0.22238103445337448),
                (0.9602898564975363, 0.10122853629037626),
            ];
            let cells = values.len();
            let h = 1.0 / cells as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in values.iter().enumerate() {
                for &(node, w) in &GL8 {
                    let x = j as f64 * h + h * 0.5 * (node + 1.0);
                    acc += v * w * 0.5 * h * fiber_term(x);
                }
            }
            acc
        }
        _ => unreachable!("oracle covers explicit bases only"),
    }
}
