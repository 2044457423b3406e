//! Exact arithmetic in a single real quadratic field `Q(√d)`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Error;

/// Largest prime tried when stripping square factors from a radicand.
const SQUAREFREE_TRIAL_LIMIT: u64 = 1_000_000;

/// The number `(a + b√d) / c` with `c > 0` and `gcd(a, b, c) = 1`.
///
/// `b = 0` encodes a rational; in that case `d` is stored as `1`. Otherwise
/// `d ≥ 2` has every square factor below [`SQUAREFREE_TRIAL_LIMIT`]² removed,
/// which makes equality syntactic for all radicands met in practice.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadSurd {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: BigInt,
}

/// Splits `n > 0` into `(f, m)` with `n = f²·m` and `m` free of small square factors.
fn square_part(n: &BigInt) -> (BigInt, BigInt) {
    let mut m = n.clone();
    let mut f = BigInt::one();
    let mut p: u64 = 2;
    while p <= SQUAREFREE_TRIAL_LIMIT {
        let pp = BigInt::from(p) * BigInt::from(p);
        if pp > m {
            break;
        }
        while (&m % &pp).is_zero() {
            m /= &pp;
            f *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    let r = m.sqrt();
    if &r * &r == m {
        f *= &r;
        m = BigInt::one();
    }
    (f, m)
}

fn sign_of(a: &BigInt) -> Ordering {
    match a.sign() {
        Sign::Minus => Ordering::Less,
        Sign::NoSign => Ordering::Equal,
        Sign::Plus => Ordering::Greater,
    }
}

/// Sign of `A + B√d` for a non-square `d > 1`.
fn sign_linear(a: &BigInt, b: &BigInt, d: &BigInt) -> Ordering {
    let sa = sign_of(a);
    let sb = sign_of(b);
    if sb == Ordering::Equal {
        return sa;
    }
    if sa == Ordering::Equal || sa == sb {
        return sb;
    }
    // opposite signs: the larger magnitude wins; equality is impossible
    if a * a > b * b * d {
        sa
    } else {
        sb
    }
}

impl QuadSurd {
    /// Builds `(a + b√d)/c`, pulling square factors out of `d`.
    pub fn new(a: BigInt, b: BigInt, d: BigInt, c: BigInt) -> Result<Self, Error> {
        if c.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if d.is_negative() {
            return Err(Error::InvalidInput(format!("negative radicand {d}")));
        }
        if d.is_zero() || b.is_zero() {
            return Ok(Self::canonical(a, BigInt::zero(), BigInt::one(), c));
        }
        let (f, m) = square_part(&d);
        if m.is_one() {
            return Ok(Self::canonical(a + b * f, BigInt::zero(), BigInt::one(), c));
        }
        Ok(Self::canonical(a, b * f, m, c))
    }

    pub fn from_rational(r: &BigRational) -> Self {
        Self::canonical(r.numer().clone(), BigInt::zero(), BigInt::one(), r.denom().clone())
    }

    pub fn from_integer(n: BigInt) -> Self {
        Self::canonical(n, BigInt::zero(), BigInt::one(), BigInt::one())
    }

    fn canonical(mut a: BigInt, mut b: BigInt, mut d: BigInt, mut c: BigInt) -> Self {
        if b.is_zero() {
            d = BigInt::one();
        }
        if c.is_negative() {
            a = -a;
            b = -b;
            c = -c;
        }
        let g = a.gcd(&b).gcd(&c);
        if !g.is_one() && !g.is_zero() {
            a /= &g;
            b /= &g;
            c /= &g;
        }
        QuadSurd { a, b, c, d }
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }
    pub fn b(&self) -> &BigInt {
        &self.b
    }
    pub fn c(&self) -> &BigInt {
        &self.c
    }
    pub fn d(&self) -> &BigInt {
        &self.d
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        self.is_rational()
            .then(|| BigRational::new(self.a.clone(), self.c.clone()))
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Radicand of the field the value lives in, `None` for rationals.
    pub fn field(&self) -> Option<&BigInt> {
        (!self.b.is_zero()).then_some(&self.d)
    }

    fn common_d<'a>(&'a self, other: &'a Self) -> Option<&'a BigInt> {
        match (self.field(), other.field()) {
            (Some(d1), Some(d2)) if d1 != d2 => None,
            (Some(d), _) | (_, Some(d)) => Some(d),
            (None, None) => Some(&self.d),
        }
    }

    /// Sum, or `None` when the operands live in different quadratic fields.
    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        let d = self.common_d(other)?.clone();
        Some(Self::canonical(
            &self.a * &other.c + &other.a * &self.c,
            &self.b * &other.c + &other.b * &self.c,
            d,
            &self.c * &other.c,
        ))
    }

    pub fn checked_mul(&self, other: &Self) -> Option<Self> {
        let d = self.common_d(other)?.clone();
        Some(Self::canonical(
            &self.a * &other.a + &self.b * &other.b * &d,
            &self.a * &other.b + &self.b * &other.a,
            d,
            &self.c * &other.c,
        ))
    }

    pub fn neg(&self) -> Self {
        QuadSurd {
            a: -&self.a,
            b: -&self.b,
            c: self.c.clone(),
            d: self.d.clone(),
        }
    }

    pub fn mul_int(&self, n: &BigInt) -> Self {
        Self::canonical(&self.a * n, &self.b * n, self.d.clone(), self.c.clone())
    }

    /// `1/self` by conjugate rationalization.
    pub fn recip(&self) -> Result<Self, Error> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let norm = &self.a * &self.a - &self.b * &self.b * &self.d;
        Ok(Self::canonical(
            &self.c * &self.a,
            -(&self.c * &self.b),
            self.d.clone(),
            norm,
        ))
    }

    /// Exact sign of the value.
    pub fn signum(&self) -> Ordering {
        sign_linear(&self.a, &self.b, &self.d)
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Exact comparison against a rational.
    pub fn cmp_rational(&self, r: &BigRational) -> Ordering {
        // sign((a + b√d)/c − m/n) = sign((a n − m c) + b n √d), as c, n > 0
        let (m, n) = (r.numer(), r.denom());
        sign_linear(&(&self.a * n - m * &self.c), &(&self.b * n), &self.d)
    }

    /// Greatest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        // floor((a + z)/c) = floor((a + floor z)/c) for integer c > 0
        let z = if self.b.is_zero() {
            BigInt::zero()
        } else {
            let r = (&self.b * &self.b * &self.d).sqrt();
            if self.b.is_positive() {
                r
            } else {
                -r - 1
            }
        };
        (&self.a + z).div_floor(&self.c)
    }

    /// Enclosure `[lo, hi]·2^-scale`, exact when the value is dyadic.
    pub(crate) fn enclose(&self, scale: u32) -> (BigInt, BigInt) {
        let shifted_a = &self.a << scale;
        let (lo_num, hi_num) = if self.b.is_zero() {
            (shifted_a.clone(), shifted_a)
        } else {
            let r = ((&self.b * &self.b * &self.d) << (2 * scale)).sqrt();
            if self.b.is_positive() {
                (&shifted_a + &r, &shifted_a + &r + 1)
            } else {
                (&shifted_a - &r - 1, &shifted_a - &r)
            }
        };
        (lo_num.div_floor(&self.c), div_ceil(&hi_num, &self.c))
    }

    pub fn to_f64(&self) -> f64 {
        let (lo, hi) = self.enclose(64);
        BigRational::new(lo + hi, BigInt::one() << 65)
            .to_f64()
            .unwrap_or(f64::NAN)
    }
}

pub(crate) fn div_ceil(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "rat:{}/{}", self.a, self.c)
        } else {
            write!(f, "surd:({}+{}*sqrt({}))/{}", self.a, self.b, self.d, self.c)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(a: i64, b: i64, d: i64, c: i64) -> QuadSurd {
        QuadSurd::new(a.into(), b.into(), d.into(), c.into()).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn canonical_form() {
        // (2 + 2√8)/4 = (1 + 2√2)/2
        let x = s(2, 2, 8, 4);
        assert_eq!(x, s(1, 2, 2, 2));
        assert_eq!(x.d(), &BigInt::from(2));
        // negative denominator flips
        assert_eq!(s(1, 1, 5, -2), s(-1, -1, 5, 2));
        // perfect square radicand collapses to a rational
        assert!(s(1, 1, 9, 2).is_rational());
        assert_eq!(s(1, 1, 9, 2).to_rational(), Some(rat(2, 1)));
    }

    #[test]
    fn golden_ratio_comparisons() {
        let g = s(-1, 1, 5, 2);
        assert_eq!(g.cmp_rational(&rat(1, 2)), Ordering::Greater);
        assert_eq!(g.cmp_rational(&rat(5, 8)), Ordering::Less);
        assert_eq!(g.floor(), BigInt::from(0));
        assert_eq!(s(0, 1, 2, 1).floor(), BigInt::from(1));
        assert_eq!(s(0, -1, 2, 1).floor(), BigInt::from(-2));
        assert_eq!(QuadSurd::from_rational(&rat(-3, 2)).floor(), BigInt::from(-2));
    }

    #[test]
    fn reciprocal_rationalizes() {
        let g = s(-1, 1, 5, 2);
        assert_eq!(g.recip().unwrap(), s(1, 1, 5, 2));
        let r = s(-1, 1, 2, 1).recip().unwrap();
        assert_eq!(r, s(1, 1, 2, 1));
        assert!(matches!(s(0, 0, 5, 1).recip(), Err(Error::DivisionByZero)));
    }

    #[test]
    fn mixed_fields_do_not_combine() {
        assert!(s(0, 1, 2, 1).checked_add(&s(0, 1, 5, 1)).is_none());
        assert!(s(0, 1, 2, 1).checked_add(&s(3, 0, 5, 1)).is_some());
        let p = s(0, 1, 2, 1).checked_mul(&s(0, 1, 2, 1)).unwrap();
        assert_eq!(p.to_rational(), Some(rat(2, 1)));
    }

    #[test]
    fn enclosure_contains_value() {
        let g = s(-1, 1, 5, 2);
        let (lo, hi) = g.enclose(40);
        let lo = BigRational::new(lo, BigInt::one() << 40);
        let hi = BigRational::new(hi, BigInt::one() << 40);
        assert_eq!(g.cmp_rational(&lo), Ordering::Greater);
        assert_eq!(g.cmp_rational(&hi), Ordering::Less);
    }
}
