//! Outward-rounded dyadic intervals `[lo, hi]·2^-scale`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::surd::div_ceil;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub(crate) lo: BigInt,
    pub(crate) hi: BigInt,
    pub(crate) scale: u32,
}

fn floor_shift(x: &BigInt, s: u32) -> BigInt {
    // `>>` on a negative BigInt rounds toward −∞
    x >> s
}

fn ceil_shift(x: &BigInt, s: u32) -> BigInt {
    -((-x) >> s)
}

impl Enclosure {
    pub(crate) fn new(lo: BigInt, hi: BigInt, scale: u32) -> Self {
        debug_assert!(lo <= hi);
        Enclosure { lo, hi, scale }
    }

    /// Encloses the rational `r` at the given scale.
    pub(crate) fn from_rational(r: &BigRational, scale: u32) -> Self {
        let n = r.numer() << scale;
        Enclosure {
            lo: n.div_floor(r.denom()),
            hi: div_ceil(&n, r.denom()),
            scale,
        }
    }

    /// Encloses `[lo, hi]` given as rationals.
    pub(crate) fn from_rational_bounds(lo: &BigRational, hi: &BigRational, scale: u32) -> Self {
        let l = Self::from_rational(lo, scale);
        let h = Self::from_rational(hi, scale);
        Enclosure {
            lo: l.lo,
            hi: h.hi,
            scale,
        }
    }

    pub fn lower(&self) -> BigRational {
        BigRational::new(self.lo.clone(), BigInt::one() << self.scale)
    }

    pub fn upper(&self) -> BigRational {
        BigRational::new(self.hi.clone(), BigInt::one() << self.scale)
    }

    pub fn width(&self) -> BigRational {
        BigRational::new(&self.hi - &self.lo, BigInt::one() << self.scale)
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// Re-expresses the enclosure at another scale, rounding outward.
    pub(crate) fn rescale(&self, scale: u32) -> Self {
        match scale.cmp(&self.scale) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let s = scale - self.scale;
                Enclosure::new(&self.lo << s, &self.hi << s, scale)
            }
            Ordering::Less => {
                let s = self.scale - scale;
                Enclosure::new(floor_shift(&self.lo, s), ceil_shift(&self.hi, s), scale)
            }
        }
    }

    /// Intersection with another enclosure of the same value; keeps `self` if
    /// the two are (impossibly) disjoint.
    pub(crate) fn intersect(&self, other: &Self) -> Self {
        let o = other.rescale(self.scale);
        let lo = if o.lo > self.lo { o.lo } else { self.lo.clone() };
        let hi = if o.hi < self.hi { o.hi } else { self.hi.clone() };
        if lo <= hi {
            Enclosure::new(lo, hi, self.scale)
        } else {
            self.clone()
        }
    }

    pub(crate) fn neg(&self) -> Self {
        Enclosure::new(-&self.hi, -&self.lo, self.scale)
    }

    pub(crate) fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.scale, other.scale);
        Enclosure::new(&self.lo + &other.lo, &self.hi + &other.hi, self.scale)
    }

    pub(crate) fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.scale, other.scale);
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let min = products.iter().min().expect("four products");
        let max = products.iter().max().expect("four products");
        Enclosure::new(
            floor_shift(min, self.scale),
            ceil_shift(max, self.scale),
            self.scale,
        )
    }

    pub(crate) fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// `None` when the interval touches zero.
    pub(crate) fn recip(&self) -> Option<Self> {
        if self.contains_zero() {
            return None;
        }
        let one = BigInt::one() << (2 * self.scale);
        Some(Enclosure::new(
            one.div_floor(&self.hi),
            div_ceil(&one, &self.lo),
            self.scale,
        ))
    }

    pub(crate) fn abs(&self) -> Self {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            let hi = if -&self.lo > self.hi {
                -&self.lo
            } else {
                self.hi.clone()
            };
            Enclosure::new(BigInt::zero(), hi, self.scale)
        }
    }

    /// Decided ordering against `r`, or `None` when `r` lies inside.
    pub(crate) fn cmp_rational(&self, r: &BigRational) -> Option<Ordering> {
        if self.upper() < *r {
            Some(Ordering::Less)
        } else if self.lower() > *r {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && self.lower() == *r {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Narrow enough for a 40-bit relative midpoint, or within `2^{−scale/2}` of zero.
    pub(crate) fn is_tight(&self) -> bool {
        let w = &self.hi - &self.lo;
        let mag = self.lo.abs().max(self.hi.abs());
        (&w << 40u32) <= mag || w <= BigInt::one() << (self.scale / 2)
    }

    pub(crate) fn midpoint_f64(&self) -> f64 {
        BigRational::new(&self.lo + &self.hi, BigInt::one() << (self.scale + 1))
            .to_f64()
            .unwrap_or(f64::NAN)
    }
}
