//! `SL(2, Z)` matrices acting on plane points.

mod enumerate;
mod factor;

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use crate::real::RealValue;
use crate::Error;

pub use enumerate::{
    count_norm_bounded, enumerate_entries, enumerate_norm_bounded, family, second_rows, write_enumeration_csv,
    Entries,
};
pub(crate) use enumerate::{lift, t_range};
pub use factor::{factorize, Factorization, Lemma7Hypotheses};

/// `[[v1, u1], [v2, u2]]` with `v1·u2 − u1·v2 = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnimodularMatrix {
    v1: BigInt,
    u1: BigInt,
    v2: BigInt,
    u2: BigInt,
}

impl UnimodularMatrix {
    pub fn new(
        v1: impl Into<BigInt>,
        u1: impl Into<BigInt>,
        v2: impl Into<BigInt>,
        u2: impl Into<BigInt>,
    ) -> Result<Self, Error> {
        let m = UnimodularMatrix {
            v1: v1.into(),
            u1: u1.into(),
            v2: v2.into(),
            u2: u2.into(),
        };
        if !m.det().is_one() {
            return Err(Error::InvalidInput(format!("{m} has determinant {}", m.det())));
        }
        Ok(m)
    }

    /// For entries already known to have determinant one.
    pub(crate) fn from_entries(v1: BigInt, u1: BigInt, v2: BigInt, u2: BigInt) -> Self {
        let m = UnimodularMatrix { v1, u1, v2, u2 };
        assert!(m.det().is_one(), "{m} is not unimodular");
        m
    }

    pub fn identity() -> Self {
        Self::from_entries(1.into(), 0.into(), 0.into(), 1.into())
    }

    /// `J = [[0, −1], [1, 0]]`.
    pub fn j() -> Self {
        Self::from_entries(0.into(), (-1).into(), 1.into(), 0.into())
    }

    /// `U = [[1, 1], [0, 1]]`.
    pub fn u() -> Self {
        Self::from_entries(1.into(), 1.into(), 0.into(), 1.into())
    }

    /// `U^ℓ = [[1, ℓ], [0, 1]]`.
    pub fn u_pow(l: &BigInt) -> Self {
        Self::from_entries(1.into(), l.clone(), 0.into(), 1.into())
    }

    pub fn v1(&self) -> &BigInt {
        &self.v1
    }
    pub fn u1(&self) -> &BigInt {
        &self.u1
    }
    pub fn v2(&self) -> &BigInt {
        &self.v2
    }
    pub fn u2(&self) -> &BigInt {
        &self.u2
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> [&BigInt; 4] {
        [&self.v1, &self.u1, &self.v2, &self.u2]
    }

    pub fn det(&self) -> BigInt {
        &self.v1 * &self.u2 - &self.u1 * &self.v2
    }

    /// Sup-norm `max |entry|`.
    pub fn norm(&self) -> BigInt {
        self.entries().into_iter().map(|e| e.abs()).max().expect("four entries")
    }

    /// Sup-norm of the first column.
    pub fn first_column_norm(&self) -> BigInt {
        self.v1.abs().max(self.v2.abs())
    }

    pub fn second_column_norm(&self) -> BigInt {
        self.u1.abs().max(self.u2.abs())
    }

    pub fn inverse(&self) -> Self {
        UnimodularMatrix {
            v1: self.u2.clone(),
            u1: -&self.u1,
            v2: -&self.v2,
            u2: self.v1.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        UnimodularMatrix {
            v1: -&self.v1,
            u1: -&self.u1,
            v2: -&self.v2,
            u2: -&self.u2,
        }
    }

    /// `self^n` for any integer `n`.
    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        (0..n.unsigned_abs()).fold(Self::identity(), |acc, _| &acc * &base)
    }

    pub fn apply(&self, p: &PlanePoint) -> PlanePoint {
        PlanePoint::new(
            &p.x1.mul_int(&self.v1) + &p.x2.mul_int(&self.u1),
            &p.x1.mul_int(&self.v2) + &p.x2.mul_int(&self.u2),
        )
    }
}

impl Mul for &UnimodularMatrix {
    type Output = UnimodularMatrix;
    fn mul(self, b: &UnimodularMatrix) -> UnimodularMatrix {
        UnimodularMatrix::from_entries(
            &self.v1 * &b.v1 + &self.u1 * &b.v2,
            &self.v1 * &b.u1 + &self.u1 * &b.u2,
            &self.v2 * &b.v1 + &self.u2 * &b.v2,
            &self.v2 * &b.u1 + &self.u2 * &b.u2,
        )
    }
}

impl Mul for UnimodularMatrix {
    type Output = UnimodularMatrix;
    fn mul(self, b: UnimodularMatrix) -> UnimodularMatrix {
        &self * &b
    }
}

impl fmt::Display for UnimodularMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.v1, self.u1, self.v2, self.u2)
    }
}

impl FromStr for UnimodularMatrix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let cleaned: String = s.chars().filter(|c| !c.is_whitespace() && *c != '[' && *c != ']').collect();
        let parts: Vec<BigInt> = cleaned
            .split(',')
            .map(|p| p.parse::<BigInt>())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::InvalidInput(format!("cannot parse matrix {s:?}")))?;
        match parts.as_slice() {
            [v1, u1, v2, u2] => Self::new(v1.clone(), u1.clone(), v2.clone(), u2.clone()),
            _ => Err(Error::InvalidInput(format!("matrix {s:?} needs four entries"))),
        }
    }
}

/// A point `(x1, x2)` of the real plane.
#[derive(Clone, Debug)]
pub struct PlanePoint {
    pub x1: RealValue,
    pub x2: RealValue,
}

impl PlanePoint {
    pub fn new(x1: RealValue, x2: RealValue) -> Self {
        PlanePoint { x1, x2 }
    }

    /// `(ξ, 1)`.
    pub fn from_slope(xi: RealValue) -> Self {
        PlanePoint::new(xi, RealValue::one())
    }

    pub fn origin() -> Self {
        PlanePoint::new(RealValue::zero(), RealValue::zero())
    }

    pub fn is_origin(&self) -> Result<bool, Error> {
        Ok(self.x1.signum()?.is_eq() && self.x2.signum()?.is_eq())
    }

    /// `x1 / x2`.
    pub fn slope(&self) -> Result<RealValue, Error> {
        if self.x2.signum()?.is_eq() {
            return Err(Error::DivisionByZero);
        }
        Ok(&self.x1 * &self.x2.recip()?)
    }

    /// `max(|x1|, |x2|)`.
    pub fn sup_norm(&self) -> Result<RealValue, Error> {
        self.x1.abs().max_value(&self.x2.abs())
    }

    pub fn sub(&self, other: &PlanePoint) -> PlanePoint {
        PlanePoint::new(&self.x1 - &other.x1, &self.x2 - &other.x2)
    }
}

/// Splits at commas outside brackets and parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut depth = 0i32;
    let mut start = 0;
    let mut parts = Vec::new();
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

impl FromStr for PlanePoint {
    type Err = Error;
    /// `"y1,y2"` with each coordinate in the real-input grammar.
    fn from_str(s: &str) -> Result<Self, Error> {
        match split_top_level(s).as_slice() {
            [a, b] => Ok(PlanePoint::new(a.parse()?, b.parse()?)),
            _ => Err(Error::InvalidInput(format!("point {s:?} needs two comma-separated coordinates"))),
        }
    }
}

impl fmt::Display for PlanePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

#[cfg(test)]
pub(crate) fn m(v1: i64, u1: i64, v2: i64, u2: i64) -> UnimodularMatrix {
    UnimodularMatrix::new(v1, u1, v2, u2).expect("unimodular")
}
