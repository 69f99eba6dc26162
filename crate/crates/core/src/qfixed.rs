//! Exact signed base-`Q` fixed-point numbers.
//!
//! A [`QFixed`] stores `mantissa * Q^-frac_digits` with an arbitrary-precision
//! mantissa. Addition is ordinary big-integer addition after rescaling to a
//! common number of fractional digits, so carries never need to be tracked by
//! hand. Digits are extracted on demand with [`QFixed::digit_at`].

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct QFixed {
    base: u32,
    frac_digits: u32,
    mantissa: BigInt,
}

pub(crate) fn big_pow(base: u32, exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(base), exp as usize)
}

fn check_base(base: u32) -> Result<()> {
    if base < 2 {
        return Err(Error::InvalidParameter(format!("base must be at least 2, got {base}")));
    }
    Ok(())
}

impl QFixed {
    /// Builds `mantissa * base^-frac_digits`.
    pub fn new(base: u32, frac_digits: u32, mantissa: impl Into<BigInt>) -> Result<Self> {
        check_base(base)?;
        Ok(Self { base, frac_digits, mantissa: mantissa.into() })
    }

    pub fn zero(base: u32) -> Result<Self> {
        Self::new(base, 0, 0)
    }

    /// Integer value `n` in base `base`.
    pub fn from_int(base: u32, n: impl Into<BigInt>) -> Result<Self> {
        Self::new(base, 0, n)
    }

    /// Nearest multiple of `base^-frac_digits` to `x`. Ties round away from
    /// zero. The conversion is exact: `x` is decomposed into its binary
    /// mantissa and exponent before rounding.
    pub fn quantize_real(x: f64, base: u32, frac_digits: u32) -> Result<Self> {
        check_base(base)?;
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!("cannot quantize non-finite value {x}")));
        }
        let (mant, exp, sign) = Float::integer_decode(x);
        let scaled = BigInt::from(mant) * big_pow(base, frac_digits);
        let magnitude = if exp >= 0 {
            scaled << (exp as usize)
        } else {
            let den = BigInt::one() << ((-exp) as usize);
            let (q, r) = scaled.div_rem(&den);
            if r * 2 >= den {
                q + 1
            } else {
                q
            }
        };
        let mantissa = if sign < 0 { -magnitude } else { magnitude };
        Self::new(base, frac_digits, mantissa)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn frac_digits(&self) -> u32 {
        self.frac_digits
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    /// Same value expressed with `frac_digits` fractional digits. Only
    /// widening is exact, so `frac_digits` must not shrink.
    fn rescaled_mantissa(&self, frac_digits: u32) -> BigInt {
        debug_assert!(frac_digits >= self.frac_digits);
        &self.mantissa * big_pow(self.base, frac_digits - self.frac_digits)
    }

    fn check_same_base(&self, other: &Self) -> Result<()> {
        if self.base != other.base {
            return Err(Error::IncompatibleOperands(self.base, other.base));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_base(other)?;
        let f = self.frac_digits.max(other.frac_digits);
        Ok(Self {
            base: self.base,
            frac_digits: f,
            mantissa: self.rescaled_mantissa(f) + other.rescaled_mantissa(f),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_base(other)?;
        let f = self.frac_digits.max(other.frac_digits);
        Ok(Self {
            base: self.base,
            frac_digits: f,
            mantissa: self.rescaled_mantissa(f) - other.rescaled_mantissa(f),
        })
    }

    pub fn neg(&self) -> Self {
        Self { base: self.base, frac_digits: self.frac_digits, mantissa: -&self.mantissa }
    }

    /// Multiplies by `base^m`, moving every digit `m` places up.
    pub fn scale_by_power(&self, m: i64) -> Self {
        let f = i64::from(self.frac_digits);
        if m <= f {
            let frac_digits = u32::try_from(f - m).expect("fractional digit count overflow");
            Self { base: self.base, frac_digits, mantissa: self.mantissa.clone() }
        } else {
            let up = u32::try_from(m - f).expect("exponent overflow");
            Self { base: self.base, frac_digits: 0, mantissa: &self.mantissa * big_pow(self.base, up) }
        }
    }

    pub fn scale_by_int(&self, c: impl Into<BigInt>) -> Self {
        Self { base: self.base, frac_digits: self.frac_digits, mantissa: &self.mantissa * c.into() }
    }

    /// Clamps negative values to zero.
    pub fn clamp_nonnegative(&self) -> Self {
        if self.is_negative() {
            Self { base: self.base, frac_digits: self.frac_digits, mantissa: BigInt::zero() }
        } else {
            self.clone()
        }
    }

    /// `floor(value / Q^i) mod Q`.
    pub fn digit_at(&self, i: i64) -> Result<u32> {
        if self.is_negative() {
            return Err(Error::NegativeValue);
        }
        let shift = i64::from(self.frac_digits) + i;
        if shift < 0 {
            return Ok(0);
        }
        let shift = u32::try_from(shift).expect("digit position overflow");
        let q = &self.mantissa / big_pow(self.base, shift);
        Ok(digit_u32(&(q % self.base)))
    }

    /// Digits at positions `lo..=hi`, least significant first. One big
    /// division plus repeated small divisions instead of `hi - lo + 1`
    /// independent [`QFixed::digit_at`] calls.
    pub fn digits(&self, lo: i64, hi: i64) -> Result<Vec<u32>> {
        if self.is_negative() {
            return Err(Error::NegativeValue);
        }
        if hi < lo {
            return Ok(Vec::new());
        }
        let shift = i64::from(self.frac_digits) + lo;
        let mut rest = if shift >= 0 {
            &self.mantissa / big_pow(self.base, u32::try_from(shift).expect("digit position overflow"))
        } else {
            // Positions below -frac_digits are zero; pad by multiplying up.
            let pad = u32::try_from(-shift).expect("digit position overflow");
            &self.mantissa * big_pow(self.base, pad)
        };
        let base = BigInt::from(self.base);
        let mut out = Vec::with_capacity((hi - lo + 1) as usize);
        for _ in lo..=hi {
            let (q, r) = rest.div_rem(&base);
            out.push(digit_u32(&r));
            rest = q;
        }
        Ok(out)
    }

    /// Lowest and highest positions holding a nonzero digit of `|value|`, or
    /// `None` for zero.
    pub fn digit_span(&self) -> Option<(i64, i64)> {
        if self.is_zero() {
            return None;
        }
        let mut m = self.mantissa.abs();
        let base = BigInt::from(self.base);
        let mut lo = -i64::from(self.frac_digits);
        loop {
            let (q, r) = m.div_rem(&base);
            if !r.is_zero() {
                break;
            }
            m = q;
            lo += 1;
        }
        let mut hi = lo;
        let mut top = m / &base;
        while !top.is_zero() {
            top /= &base;
            hi += 1;
        }
        Some((lo, hi))
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.mantissa.clone(), big_pow(self.base, self.frac_digits))
    }

    /// Nearest `f64`. Display only; never used on the simulation path.
    pub fn to_f64(&self) -> f64 {
        let r = self.to_rational();
        r.to_f64().unwrap_or_else(|| {
            if r.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }

    /// Exact decimal rendering when the value terminates in base 10,
    /// otherwise the reduced fraction `p/q`.
    pub fn to_exact_string(&self) -> String {
        let r = self.to_rational();
        let (num, den) = (r.numer().clone(), r.denom().clone());
        let mut d = den.clone();
        let (mut twos, mut fives) = (0u32, 0u32);
        let two = BigInt::from(2);
        let five = BigInt::from(5);
        while (&d % &two).is_zero() {
            d /= &two;
            twos += 1;
        }
        while (&d % &five).is_zero() {
            d /= &five;
            fives += 1;
        }
        if !d.is_one() {
            return format!("{num}/{den}");
        }
        let places = twos.max(fives);
        let scaled = num * big_pow(10, places) / den;
        if places == 0 {
            return scaled.to_string();
        }
        let neg = scaled.is_negative();
        let digits = scaled.abs().to_string();
        let width = places as usize + 1;
        let padded = format!("{digits:0>width$}");
        let (int_part, frac_part) = padded.split_at(padded.len() - places as usize);
        format!("{}{int_part}.{frac_part}", if neg { "-" } else { "" })
    }
}

fn digit_u32(d: &BigInt) -> u32 {
    d.to_u32().expect("digit is below the base")
}

impl PartialEq for QFixed {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.cmp_value(other) == Ordering::Equal
    }
}

impl Eq for QFixed {}

impl QFixed {
    fn cmp_value(&self, other: &Self) -> Ordering {
        let f = self.frac_digits.max(other.frac_digits);
        let a = &self.mantissa * big_pow(self.base, f - self.frac_digits);
        let b = &other.mantissa * big_pow(other.base, f - other.frac_digits);
        a.cmp(&b)
    }
}

/// Renders `[d_k ... d_1 d_0.d_-1 ... d_-F]_Q`, digits separated by spaces,
/// with a leading `-` for negative values. All `F` fractional digits are
/// printed.
impl fmt::Display for QFixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let abs = Self { base: self.base, frac_digits: self.frac_digits, mantissa: self.mantissa.abs() };
        let hi = abs.digit_span().map_or(0, |(_, hi)| hi.max(0));
        let lo = -i64::from(self.frac_digits);
        let digits = abs.digits(lo, hi).expect("magnitude is nonnegative");
        let join = |ds: &[u32]| ds.iter().rev().map(u32::to_string).collect::<Vec<_>>().join(" ");
        let split = self.frac_digits as usize;
        let (frac, int) = digits.split_at(split);
        if self.mantissa.sign() == Sign::Minus {
            write!(f, "-")?;
        }
        if frac.is_empty() {
            write!(f, "[{}]_{}", join(int), self.base)
        } else {
            write!(f, "[{}.{}]_{}", join(int), join(frac), self.base)
        }
    }
}
