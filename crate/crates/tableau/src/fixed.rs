//! Arithmetic used by the generator: plain `f64`, or a binary fixed-point
//! number with a configurable count of fractional bits.
//!
//! Every quantity in Gauss-Legendre construction is bounded (nodes in
//! `[-1, 1]`, Legendre values in `[-1, 1]`, derivatives `O(q²)`), so a
//! fixed-point representation loses nothing against a floating one and
//! keeps the arithmetic simple.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, ToPrimitive, Zero};

/// Numbers the tableau generator can run on.
///
/// Constructors take `&self` as a template so that precision travels with
/// the values.
pub trait Arith: Clone + PartialOrd + fmt::Debug {
    fn from_f64(&self, v: f64) -> Self;
    fn int(&self, v: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn mul_int(&self, k: i64) -> Self;
    fn div_int(&self, k: i64) -> Self;
    fn neg(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    /// Correctly rounded conversion.
    fn to_f64(&self) -> f64;
    /// True when a Newton correction of this size is at working precision.
    fn negligible(&self) -> bool;

    /// `Σ a_k b_k`.
    fn dot(a: &[Self], b: &[Self]) -> Self {
        let mut acc = a[0].int(0);
        for (x, y) in a.iter().zip(b) {
            acc = acc.add(&x.mul(y));
        }
        acc
    }
}

impl Arith for f64 {
    fn from_f64(&self, v: f64) -> Self {
        v
    }
    fn int(&self, v: i64) -> Self {
        v as f64
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn mul_int(&self, k: i64) -> Self {
        self * k as f64
    }
    fn div_int(&self, k: i64) -> Self {
        self / k as f64
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn negligible(&self) -> bool {
        f64::abs(*self) <= 4.0 * f64::EPSILON
    }
}

/// `m / 2^bits` with an arbitrary-size integer `m`.
#[derive(Clone, PartialEq, Eq)]
pub struct BigFixed {
    m: BigInt,
    bits: u32,
}

impl BigFixed {
    pub fn zero(bits: u32) -> Self {
        Self {
            m: BigInt::zero(),
            bits,
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn same(&self, o: &Self) {
        debug_assert_eq!(self.bits, o.bits, "mixed fixed-point precisions");
    }

    fn with(&self, m: BigInt) -> Self {
        Self { m, bits: self.bits }
    }
}

impl fmt::Debug for BigFixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigFixed({:e}, {} bits)", self.to_f64(), self.bits)
    }
}

impl PartialOrd for BigFixed {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        self.same(o);
        Some(self.m.cmp(&o.m))
    }
}

impl Arith for BigFixed {
    fn from_f64(&self, v: f64) -> Self {
        assert!(v.is_finite(), "non-finite value in fixed point");
        if v == 0.0 {
            return self.with(BigInt::zero());
        }
        let raw = v.abs().to_bits();
        let exp = ((raw >> 52) & 0x7ff) as i64;
        let frac = raw & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let shift = e + self.bits as i64;
        let mut m = BigInt::from(mant);
        if shift >= 0 {
            m <<= shift as usize;
        } else {
            m >>= (-shift) as usize;
        }
        if v < 0.0 {
            m = -m;
        }
        self.with(m)
    }

    fn int(&self, v: i64) -> Self {
        self.with(BigInt::from(v) << self.bits as usize)
    }

    fn add(&self, o: &Self) -> Self {
        self.same(o);
        self.with(&self.m + &o.m)
    }

    fn sub(&self, o: &Self) -> Self {
        self.same(o);
        self.with(&self.m - &o.m)
    }

    fn mul(&self, o: &Self) -> Self {
        self.same(o);
        self.with((&self.m * &o.m) >> self.bits as usize)
    }

    fn div(&self, o: &Self) -> Self {
        self.same(o);
        assert!(!o.m.is_zero(), "fixed-point division by zero");
        self.with((&self.m << self.bits as usize) / &o.m)
    }

    fn mul_int(&self, k: i64) -> Self {
        self.with(&self.m * k)
    }

    fn div_int(&self, k: i64) -> Self {
        self.with(&self.m / k)
    }

    fn neg(&self) -> Self {
        self.with(-&self.m)
    }

    fn sqrt(&self) -> Self {
        assert!(!self.m.is_negative(), "square root of a negative number");
        self.with((&self.m << self.bits as usize).sqrt())
    }

    fn abs(&self) -> Self {
        self.with(self.m.abs())
    }

    fn to_f64(&self) -> f64 {
        let mag = self.m.magnitude();
        let n = mag.bits() as i64;
        if n == 0 {
            return 0.0;
        }
        let (top, drop) = if n <= 64 {
            (mag.to_u64().expect("fits"), 0)
        } else {
            let d = (n - 64) as u64;
            let mut top = (mag >> d).to_u64().expect("fits");
            if mag.trailing_zeros().is_some_and(|tz| tz < d) {
                top |= 1;
            }
            (top, d as i64)
        };
        let f = scale2(top as f64, drop - self.bits as i64);
        if self.m.sign() == Sign::Minus {
            -f
        } else {
            f
        }
    }

    fn negligible(&self) -> bool {
        // Within 2^32 units of the last place.
        self.m.magnitude().bits() <= 32
    }

    fn dot(a: &[Self], b: &[Self]) -> Self {
        let bits = a[0].bits;
        let mut acc = BigInt::zero();
        for (x, y) in a.iter().zip(b) {
            x.same(y);
            acc += &x.m * &y.m;
        }
        Self {
            m: acc >> bits as usize,
            bits,
        }
    }
}

/// `x * 2^e` without intermediate overflow or underflow for normal results.
fn scale2(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_round_trip_is_exact() {
        let z = BigFixed::zero(200);
        for v in [0.0, 1.0, -0.5, 0.1, 1.0 / 3.0, -123.456, 1e-30, 2.5e5] {
            assert_eq!(z.from_f64(v).to_f64(), v);
        }
    }

    #[test]
    fn arithmetic() {
        let z = BigFixed::zero(128);
        let third = z.int(1).div_int(3);
        assert_eq!(third.to_f64(), 1.0 / 3.0);
        let two = z.int(2);
        let r2 = two.sqrt();
        assert_eq!(r2.to_f64(), 2f64.sqrt());
        assert!(r2.mul(&r2).sub(&two).abs().to_f64() < 1e-37);
        assert_eq!(z.int(7).div(&z.int(-2)).to_f64(), -3.5);
        assert!(z.int(1) > z.int(-1));
        let a = [z.from_f64(0.5), z.from_f64(-2.0)];
        let b = [z.int(3), z.from_f64(0.25)];
        assert_eq!(BigFixed::dot(&a, &b).to_f64(), 1.0);
    }

    #[test]
    fn conversion_rounds_to_nearest() {
        // 1 + 2^-53 + 2^-100 lies just above the midpoint between 1 and the next double.
        let z = BigFixed::zero(160);
        let v = z
            .int(1)
            .add(&z.from_f64(2f64.powi(-53)))
            .add(&z.from_f64(2f64.powi(-100)));
        assert_eq!(v.to_f64(), 1.0 + f64::EPSILON);
        let tie = z.int(1).add(&z.from_f64(2f64.powi(-53)));
        assert_eq!(tie.to_f64(), 1.0);
    }
}
