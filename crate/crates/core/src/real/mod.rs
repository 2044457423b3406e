//! Exactly comparable real numbers.
//!
//! Values in a single quadratic field are handled symbolically. Anything else
//! (digit rules, decimal intervals, sums across different fields) becomes a
//! small expression DAG evaluated with outward-rounded dyadic intervals whose
//! precision is doubled on demand up to a global cap.

mod cf;
mod enclosure;
mod parse;
mod surd;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub use cf::{CfDigits, DigitRule};
pub use enclosure::Enclosure;
pub use parse::RealInput;
pub(crate) use parse::parse_rational;
pub use surd::QuadSurd;

use crate::Error;

pub const DEFAULT_PRECISION_CAP: u32 = 4096;
const START_BITS: u32 = 64;
const GUARD_BITS: u32 = 16;

static PRECISION_CAP: AtomicU32 = AtomicU32::new(DEFAULT_PRECISION_CAP);

/// Largest working precision, in bits, tried before giving up on a comparison.
pub fn precision_cap() -> u32 {
    PRECISION_CAP.load(AtomicOrdering::Relaxed)
}

pub fn set_precision_cap(bits: u32) {
    PRECISION_CAP.store(bits.max(START_BITS), AtomicOrdering::Relaxed);
}

#[derive(Debug)]
enum Kind {
    Exact(QuadSurd),
    Cf {
        digits: CfDigits,
        exact: Option<QuadSurd>,
    },
    Interval {
        digits: String,
        mid: BigRational,
        radius: BigRational,
    },
    Neg(RealValue),
    Add(RealValue, RealValue),
    Mul(RealValue, RealValue),
    Recip(RealValue),
    Abs(RealValue),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    cache: Mutex<Option<Enclosure>>,
}

/// An immutable real number with exact or certified comparisons.
#[derive(Clone, Debug)]
pub struct RealValue(Arc<Node>);

fn rat_floor(r: &BigRational) -> BigInt {
    r.numer().div_floor(r.denom())
}

impl RealValue {
    fn node(kind: Kind) -> Self {
        RealValue(Arc::new(Node {
            kind,
            cache: Mutex::new(None),
        }))
    }

    pub fn from_surd(s: QuadSurd) -> Self {
        Self::node(Kind::Exact(s))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Self::from_surd(QuadSurd::from_rational(&r))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self::from_surd(QuadSurd::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Self::from_integer(0)
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_cf(digits: CfDigits) -> Result<Self, Error> {
        let exact = digits.exact_value()?;
        Ok(Self::node(Kind::Cf { digits, exact }))
    }

    /// The interval `mid ± radius`, with `digits` kept for display.
    pub fn decimal(digits: &str, radius: BigRational) -> Result<Self, Error> {
        if !radius.is_positive() {
            return Err(Error::InvalidInput(format!("radius {radius} must be positive")));
        }
        let mid = parse::parse_decimal(digits)?;
        Ok(Self::node(Kind::Interval {
            digits: digits.to_string(),
            mid,
            radius,
        }))
    }

    /// The symbolic value when it lies in a single quadratic field.
    pub fn as_surd(&self) -> Option<&QuadSurd> {
        match &self.0.kind {
            Kind::Exact(s) => Some(s),
            Kind::Cf { exact, .. } => exact.as_ref(),
            _ => None,
        }
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        self.as_surd().and_then(|s| s.to_rational())
    }

    pub fn is_exact(&self) -> bool {
        self.as_surd().is_some()
    }

    /// True when the value is known to be rational.
    pub fn is_rational(&self) -> bool {
        match &self.0.kind {
            Kind::Cf { digits, .. } => digits.is_finite(),
            _ => self.as_rational().is_some(),
        }
    }

    pub fn cf_digits(&self) -> Option<&CfDigits> {
        match &self.0.kind {
            Kind::Cf { digits, .. } => Some(digits),
            _ => None,
        }
    }

    fn combine(&self, other: &Self, exact: impl Fn(&QuadSurd, &QuadSurd) -> Option<QuadSurd>, node: impl Fn(Self, Self) -> Kind) -> Self {
        if let (Some(a), Some(b)) = (self.as_surd(), other.as_surd()) {
            if let Some(s) = exact(a, b) {
                return Self::from_surd(s);
            }
        }
        Self::node(node(self.clone(), other.clone()))
    }

    pub fn recip(&self) -> Result<Self, Error> {
        match self.as_surd() {
            Some(s) => Ok(Self::from_surd(s.recip()?)),
            None => Ok(Self::node(Kind::Recip(self.clone()))),
        }
    }

    pub fn abs(&self) -> Self {
        match self.as_surd() {
            Some(s) => Self::from_surd(s.abs()),
            None => Self::node(Kind::Abs(self.clone())),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn mul_int(&self, n: &BigInt) -> Self {
        self * &Self::from_integer(n.clone())
    }

    pub fn mul_rational(&self, r: &BigRational) -> Self {
        self * &Self::from_rational(r.clone())
    }

    /// Enclosure at roughly `bits` fractional bits; `None` if a division by
    /// an interval straddling zero occurred.
    pub fn enclose(&self, bits: u32) -> Option<Enclosure> {
        {
            let cache = self.0.cache.lock().expect("enclosure cache poisoned");
            if let Some(c) = cache.as_ref() {
                if c.scale() >= bits {
                    return Some(c.clone());
                }
            }
        }
        let fresh = self.compute(bits)?;
        let mut cache = self.0.cache.lock().expect("enclosure cache poisoned");
        let nested = match cache.as_ref() {
            Some(old) => fresh.intersect(old),
            None => fresh,
        };
        *cache = Some(nested.clone());
        Some(nested)
    }

    fn compute(&self, bits: u32) -> Option<Enclosure> {
        let inner = bits + GUARD_BITS;
        match &self.0.kind {
            Kind::Exact(s) => {
                let (lo, hi) = s.enclose(bits);
                Some(Enclosure::new(lo, hi, bits))
            }
            Kind::Cf { exact: Some(s), .. } => {
                let (lo, hi) = s.enclose(bits);
                Some(Enclosure::new(lo, hi, bits))
            }
            Kind::Cf { digits, exact: None } => {
                let conv = digits.convergents_for_bits(bits + 1).ok()?;
                let (p, q) = conv.last().expect("a0 convergent");
                let last = BigRational::new(p.clone(), q.clone());
                if conv.len() < 2 {
                    return Some(Enclosure::from_rational(&last, bits));
                }
                let (p0, q0) = &conv[conv.len() - 2];
                let prev = BigRational::new(p0.clone(), q0.clone());
                let (lo, hi) = if prev < last { (prev, last) } else { (last, prev) };
                Some(Enclosure::from_rational_bounds(&lo, &hi, bits))
            }
            Kind::Interval { mid, radius, .. } => Some(Enclosure::from_rational_bounds(
                &(mid - radius),
                &(mid + radius),
                bits,
            )),
            Kind::Neg(a) => Some(a.enclose(bits)?.rescale(bits).neg()),
            Kind::Add(a, b) => {
                let ea = a.enclose(inner)?.rescale(inner);
                let eb = b.enclose(inner)?.rescale(inner);
                Some(ea.add(&eb))
            }
            Kind::Mul(a, b) => {
                let ea = a.enclose(inner)?.rescale(inner);
                let eb = b.enclose(inner)?.rescale(inner);
                Some(ea.mul(&eb))
            }
            Kind::Recip(a) => a.enclose(inner)?.rescale(inner).recip(),
            Kind::Abs(a) => Some(a.enclose(bits)?.rescale(bits).abs()),
        }
    }

    /// Runs `decide` on successively tighter enclosures until it answers.
    fn refine<T>(&self, context: &str, decide: impl Fn(&Enclosure) -> Option<T>) -> Result<T, Error> {
        let cap = precision_cap();
        let mut bits = START_BITS;
        loop {
            if let Some(e) = self.enclose(bits) {
                if let Some(t) = decide(&e) {
                    return Ok(t);
                }
            }
            if bits >= cap {
                return Err(Error::PrecisionExhausted {
                    context: format!("{context} for {self}"),
                    bits,
                });
            }
            bits = (bits * 2).min(cap);
        }
    }

    /// Exact ordering against a rational, or `PrecisionExhausted`.
    pub fn compare(&self, r: &BigRational) -> Result<Ordering, Error> {
        if let Some(s) = self.as_surd() {
            return Ok(s.cmp_rational(r));
        }
        self.refine(&format!("comparison with {r}"), |e| e.cmp_rational(r))
    }

    pub fn compare_int(&self, n: i64) -> Result<Ordering, Error> {
        self.compare(&BigRational::from_integer(n.into()))
    }

    pub fn signum(&self) -> Result<Ordering, Error> {
        self.compare(&BigRational::zero())
    }

    /// Ordering between two reals.
    pub fn cmp_value(&self, other: &Self) -> Result<Ordering, Error> {
        (self - other).signum()
    }

    pub fn max_value(&self, other: &Self) -> Result<Self, Error> {
        Ok(if self.cmp_value(other)? == Ordering::Less {
            other.clone()
        } else {
            self.clone()
        })
    }

    /// Greatest integer not exceeding the value.
    pub fn floor(&self) -> Result<BigInt, Error> {
        if let Some(s) = self.as_surd() {
            return Ok(s.floor());
        }
        if let Kind::Cf { digits, .. } = &self.0.kind {
            // an infinite tail lies strictly between a0 and a0 + 1
            return Ok(digits.a0().clone());
        }
        self.refine("floor", |e| {
            let lo = rat_floor(&e.lower());
            (lo == rat_floor(&e.upper())).then_some(lo)
        })
    }

    /// Smallest integer not below the value.
    pub fn ceil(&self) -> Result<BigInt, Error> {
        Ok(-(-self).floor()?)
    }

    /// Integer part, rounding toward zero.
    pub fn trunc(&self) -> Result<BigInt, Error> {
        match self.signum()? {
            Ordering::Less => self.ceil(),
            _ => self.floor(),
        }
    }

    /// One Gauss-map step `1/(v − a)`.
    pub fn reciprocal_shift(&self, a: &BigInt) -> Result<Self, Error> {
        if let Kind::Cf { digits, .. } = &self.0.kind {
            if digits.a0() == a {
                return match digits.shift()? {
                    Some(next) => Self::from_cf(next),
                    None => Err(Error::DivisionByZero),
                };
            }
        }
        if let Some(s) = self.as_surd() {
            let shifted = s
                .checked_add(&QuadSurd::from_integer(-a))
                .expect("integers embed in every field");
            return Ok(Self::from_surd(shifted.recip()?));
        }
        let shifted = self - &Self::from_integer(a.clone());
        if let Kind::Interval { .. } = &self.0.kind {
            // reject an ambiguous sign now rather than at first use
            shifted.refine("reciprocal shift", |e| (!e.contains_zero()).then_some(()))?;
        }
        shifted.recip()
    }

    /// Nearest double, from a tight enclosure; for display only.
    pub fn to_f64(&self) -> f64 {
        if let Some(s) = self.as_surd() {
            return s.to_f64();
        }
        let mut bits = START_BITS;
        let mut last = f64::NAN;
        while bits <= precision_cap() {
            if let Some(e) = self.enclose(bits) {
                last = e.midpoint_f64();
                if e.is_tight() {
                    return last;
                }
            }
            bits *= 2;
        }
        last
    }
}

impl Neg for &RealValue {
    type Output = RealValue;
    fn neg(self) -> RealValue {
        match self.as_surd() {
            Some(s) => RealValue::from_surd(s.neg()),
            None => RealValue::node(Kind::Neg(self.clone())),
        }
    }
}

impl Neg for RealValue {
    type Output = RealValue;
    fn neg(self) -> RealValue {
        -&self
    }
}

impl Add for &RealValue {
    type Output = RealValue;
    fn add(self, other: &RealValue) -> RealValue {
        self.combine(other, |a, b| a.checked_add(b), Kind::Add)
    }
}

impl Sub for &RealValue {
    type Output = RealValue;
    fn sub(self, other: &RealValue) -> RealValue {
        self + &(-other)
    }
}

impl Mul for &RealValue {
    type Output = RealValue;
    fn mul(self, other: &RealValue) -> RealValue {
        self.combine(other, |a, b| a.checked_mul(b), Kind::Mul)
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for RealValue {
            type Output = RealValue;
            fn $m(self, other: RealValue) -> RealValue {
                (&self).$m(&other)
            }
        }
        impl $tr<&RealValue> for RealValue {
            type Output = RealValue;
            fn $m(self, other: &RealValue) -> RealValue {
                (&self).$m(other)
            }
        }
    )*};
}

forward_owned!(Add add, Sub sub, Mul mul);

impl From<BigRational> for RealValue {
    fn from(r: BigRational) -> Self {
        RealValue::from_rational(r)
    }
}

impl From<QuadSurd> for RealValue {
    fn from(s: QuadSurd) -> Self {
        RealValue::from_surd(s)
    }
}

impl From<i64> for RealValue {
    fn from(n: i64) -> Self {
        RealValue::from_integer(n)
    }
}

impl std::str::FromStr for RealValue {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        s.parse::<RealInput>()?.into_value()
    }
}

impl fmt::Display for RealValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            Kind::Exact(s) => write!(f, "{s}"),
            Kind::Cf { digits, .. } => write!(f, "{digits}"),
            Kind::Interval { digits, radius, .. } => write!(f, "dec:{digits}~{radius}"),
            _ => write!(f, "≈{}", self.to_f64()),
        }
    }
}
