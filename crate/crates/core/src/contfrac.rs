//! Partial quotients, convergents `p_k/q_k`, residuals `ε_k = q_k ξ − p_k`
//! and the convergent matrices `M_k`.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::ops::RangeInclusive;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::real::{precision_cap, RealValue};
use crate::sl2::UnimodularMatrix;
use crate::Error;

/// An irrationality measure: a finite value or `∞`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Omega {
    Finite(BigRational),
    Infinite,
}

impl Omega {
    pub fn one() -> Self {
        Omega::Finite(BigRational::one())
    }

    pub fn integer(n: i64) -> Self {
        Omega::Finite(BigRational::from_integer(n.into()))
    }
}

impl fmt::Display for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Omega::Finite(r) => write!(f, "{r}"),
            Omega::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Omega {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let t = s.trim();
        if matches!(t, "inf" | "infinity" | "∞") {
            return Ok(Omega::Infinite);
        }
        let r = crate::real::parse_rational(t)?;
        if r < BigRational::one() {
            return Err(Error::InvalidInput(format!("ω = {r} is below 1")));
        }
        Ok(Omega::Finite(r))
    }
}

/// `(k, p_k, q_k, ε_k)`.
#[derive(Clone, Debug)]
pub struct Convergent {
    pub k: usize,
    pub p: BigInt,
    pub q: BigInt,
    /// `q_k ξ − p_k`.
    pub epsilon: RealValue,
}

impl Convergent {
    /// `+1` for even `k`, `−1` for odd `k`.
    pub fn sign(&self) -> i32 {
        if self.k.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn abs_epsilon(&self) -> RealValue {
        if self.k.is_multiple_of(2) {
            self.epsilon.clone()
        } else {
            -&self.epsilon
        }
    }
}

/// `M_k` for `k ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergentMatrix {
    pub k: usize,
    pub matrix: UnimodularMatrix,
}

/// Growth ratios `log q_{k+1} / log q_k` over a window of indices.
#[derive(Clone, Debug)]
pub struct OmegaWindow {
    pub ratios: Vec<(usize, f64)>,
    pub max_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    /// An exact value supplied by the caller or known from the input type.
    pub asserted: Option<Omega>,
}

#[derive(Debug, Default)]
struct Table {
    digits: Vec<BigInt>,
    /// `(p_k, q_k)` for `k = 0..`.
    convergents: Vec<(BigInt, BigInt)>,
    /// Remainder after the last extracted digit, for exact surds.
    remainder: Option<RealValue>,
}

/// Lazily extended continued-fraction data of an irrational number.
#[derive(Debug)]
pub struct ContinuedFraction {
    x: RealValue,
    table: RwLock<Table>,
}

/// Simple continued fraction of a rational.
fn rational_cf(r: &BigRational) -> Vec<BigInt> {
    let (mut n, mut d) = (r.numer().clone(), r.denom().clone());
    let mut out = Vec::new();
    while !d.is_zero() {
        let (a, rem) = n.div_mod_floor(&d);
        out.push(a);
        n = d;
        d = rem;
    }
    out
}

impl ContinuedFraction {
    pub fn new(x: RealValue) -> Result<Self, Error> {
        if x.is_rational() {
            let len = match (x.cf_digits(), x.as_rational()) {
                (Some(d), _) => d.finite_len().unwrap_or(0),
                (None, Some(r)) => rational_cf(&r).len().saturating_sub(1),
                _ => 0,
            };
            return Err(Error::RationalInput(len));
        }
        let remainder = x.is_exact().then(|| x.clone());
        Ok(ContinuedFraction {
            x,
            table: RwLock::new(Table {
                remainder,
                ..Table::default()
            }),
        })
    }

    pub fn x(&self) -> &RealValue {
        &self.x
    }

    fn extend_digits(&self, n: usize) -> Result<(), Error> {
        if self.table.read().expect("table poisoned").digits.len() > n {
            return Ok(());
        }
        let mut t = self.table.write().expect("table poisoned");
        if let Some(cf) = self.x.cf_digits() {
            while t.digits.len() <= n {
                let k = t.digits.len();
                let a = cf.digit(k)?.ok_or(Error::RationalInput(k))?;
                t.digits.push(a);
            }
        } else if t.remainder.is_some() {
            while t.digits.len() <= n {
                let r = t.remainder.take().expect("exact remainder");
                let a = r.floor()?;
                let next = r.reciprocal_shift(&a).map_err(|e| match e {
                    Error::DivisionByZero => Error::RationalInput(t.digits.len()),
                    other => other,
                })?;
                t.digits.push(a);
                t.remainder = Some(next);
            }
        } else {
            t.digits = self.digits_by_enclosure(n)?;
        }
        Ok(())
    }

    /// Digits shared by both ends of an enclosure, refined until `n + 1` are known.
    fn digits_by_enclosure(&self, n: usize) -> Result<Vec<BigInt>, Error> {
        let cap = precision_cap();
        let mut bits = 64;
        let mut known = 0;
        loop {
            if let Some(e) = self.x.enclose(bits) {
                let lo = rational_cf(&e.lower());
                let hi = rational_cf(&e.upper());
                // a rational lies inside the cylinder of its expansion minus the last digit
                let common: Vec<BigInt> = lo[..lo.len() - 1]
                    .iter()
                    .zip(&hi[..hi.len() - 1])
                    .take_while(|(a, b)| a == b)
                    .map(|(a, _)| a.clone())
                    .collect();
                known = known.max(common.len());
                if common.len() > n {
                    return Ok(common[..=n].to_vec());
                }
            }
            if bits >= cap {
                return Err(Error::PrecisionExhausted {
                    context: format!("partial quotient a_{known} of {}", self.x),
                    bits,
                });
            }
            bits = (bits * 2).min(cap);
        }
    }

    /// `a_0, ..., a_n`.
    pub fn partial_quotients(&self, n: usize) -> Result<Vec<BigInt>, Error> {
        self.extend_digits(n)?;
        Ok(self.table.read().expect("table poisoned").digits[..=n].to_vec())
    }

    fn extend_convergents(&self, n: usize) -> Result<(), Error> {
        if self.table.read().expect("table poisoned").convergents.len() > n {
            return Ok(());
        }
        self.extend_digits(n)?;
        let mut t = self.table.write().expect("table poisoned");
        while t.convergents.len() <= n {
            let k = t.convergents.len();
            let a = &t.digits[k];
            let (pm1, qm1) = if k >= 1 { t.convergents[k - 1].clone() } else { (BigInt::one(), BigInt::zero()) };
            let (pm2, qm2) = if k >= 2 {
                t.convergents[k - 2].clone()
            } else if k == 1 {
                (BigInt::one(), BigInt::zero())
            } else {
                (BigInt::zero(), BigInt::one())
            };
            let next = (a * &pm1 + pm2, a * &qm1 + qm2);
            t.convergents.push(next);
        }
        Ok(())
    }

    /// `(p_k, q_k)`, with `(p_{−1}, q_{−1}) = (1, 0)`.
    pub fn pq(&self, k: isize) -> Result<(BigInt, BigInt), Error> {
        if k < 0 {
            return Ok((BigInt::one(), BigInt::zero()));
        }
        let k = k as usize;
        self.extend_convergents(k)?;
        Ok(self.table.read().expect("table poisoned").convergents[k].clone())
    }

    pub fn q(&self, k: usize) -> Result<BigInt, Error> {
        Ok(self.pq(k as isize)?.1)
    }

    pub fn convergent(&self, k: usize) -> Result<Convergent, Error> {
        let (p, q) = self.pq(k as isize)?;
        let epsilon = &self.x.mul_int(&q) - &RealValue::from_integer(p.clone());
        Ok(Convergent { k, p, q, epsilon })
    }

    /// Convergents `0..=n`.
    pub fn convergents(&self, n: usize) -> Result<Vec<Convergent>, Error> {
        (0..=n).map(|k| self.convergent(k)).collect()
    }

    /// `|ε_k|` (with `|ε_{−1}| = 1`).
    pub fn abs_epsilon(&self, k: isize) -> Result<RealValue, Error> {
        if k < 0 {
            return Ok(RealValue::one());
        }
        Ok(self.convergent(k as usize)?.abs_epsilon())
    }

    /// `M_k`: `[[q_k, −p_k], [−q_{k−1}, p_{k−1}]]` for even `k`,
    /// `[[q_k, −p_k], [q_{k−1}, −p_{k−1}]]` for odd `k`.
    pub fn matrix(&self, k: usize) -> Result<ConvergentMatrix, Error> {
        if k == 0 {
            return Err(Error::InvalidInput("M_k needs k ≥ 1".into()));
        }
        let (p, q) = self.pq(k as isize)?;
        let (p1, q1) = self.pq(k as isize - 1)?;
        let matrix = if k.is_multiple_of(2) {
            UnimodularMatrix::from_entries(q, -p, -q1, p1)
        } else {
            UnimodularMatrix::from_entries(q, -p, q1, -p1)
        };
        Ok(ConvergentMatrix { k, matrix })
    }

    /// Checks `1/(2 q_{k+1}) ≤ |ε_k| ≤ 1/q_{k+1}` exactly.
    pub fn certify_epsilon_bounds(&self, k: usize) -> Result<(), Error> {
        let e = self.convergent(k)?.abs_epsilon();
        let q1 = self.q(k + 1)?;
        let lower = BigRational::new(BigInt::one(), &q1 * 2u32);
        let upper = BigRational::new(BigInt::one(), q1);
        if e.compare(&lower)? == Ordering::Less || e.compare(&upper)? == Ordering::Greater {
            return Err(Error::BoundViolated(format!(
                "1/(2q_{}) ≤ |ε_{k}| ≤ 1/q_{}",
                k + 1,
                k + 1
            )));
        }
        Ok(())
    }

    /// Smallest `k` with `q_k ≥ bound`.
    pub fn first_index_with_q_at_least(&self, bound: &BigInt) -> Result<usize, Error> {
        let mut k = 0;
        while &self.q(k)? < bound {
            k += 1;
        }
        Ok(k)
    }

    pub fn omega_window(&self, ks: RangeInclusive<usize>, asserted: Option<Omega>) -> Result<OmegaWindow, Error> {
        let mut ratios = Vec::new();
        for k in ks {
            let q = self.q(k)?;
            if q < BigInt::from(2) {
                continue;
            }
            let q1 = self.q(k + 1)?;
            ratios.push((k, ln_big(&q1) / ln_big(&q)));
        }
        let max_ratio = ratios.iter().map(|r| r.1).reduce(f64::max);
        let min_ratio = ratios.iter().map(|r| r.1).reduce(f64::min);
        // quadratic irrationals have bounded partial quotients
        let asserted = asserted.or_else(|| self.x.is_exact().then(Omega::one));
        Ok(OmegaWindow {
            ratios,
            max_ratio,
            min_ratio,
            asserted,
        })
    }

    /// CSV rows `k,p,q,sign,abs_eps_lower_num,abs_eps_lower_den,abs_eps_upper_num,abs_eps_upper_den`.
    pub fn write_csv<W: Write>(&self, n: usize, out: W) -> Result<(), Error> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv output failed: {e}"));
        w.write_record([
            "k",
            "p",
            "q",
            "sign",
            "abs_eps_lower_num",
            "abs_eps_lower_den",
            "abs_eps_upper_num",
            "abs_eps_upper_den",
        ])
        .map_err(io)?;
        for row in self.table_rows(n)? {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("csv output failed: {e}")))?;
        Ok(())
    }

    /// Rows of the convergent table as strings, with the bounds `1/(2q_{k+1}) ≤ |ε_k| ≤ 1/q_{k+1}`.
    pub fn table_rows(&self, n: usize) -> Result<Vec<[String; 8]>, Error> {
        (0..=n)
            .map(|k| {
                let c = self.convergent(k)?;
                let q1 = self.q(k + 1)?;
                Ok([
                    k.to_string(),
                    c.p.to_string(),
                    c.q.to_string(),
                    if c.sign() > 0 { "+" } else { "-" }.to_string(),
                    "1".to_string(),
                    (&q1 * 2u32).to_string(),
                    "1".to_string(),
                    q1.to_string(),
                ])
            })
            .collect()
    }
}

/// Natural logarithm of a positive integer of any size.
pub(crate) fn ln_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().expect("finite").ln();
    }
    let shift = bits - 64;
    (n >> shift).to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn partial_quotients(x: &RealValue, n: usize) -> Result<Vec<BigInt>, Error> {
    ContinuedFraction::new(x.clone())?.partial_quotients(n)
}

pub fn convergents(x: &RealValue, n: usize) -> Result<Vec<Convergent>, Error> {
    ContinuedFraction::new(x.clone())?.convergents(n)
}

pub fn convergent_matrix(x: &RealValue, k: usize) -> Result<ConvergentMatrix, Error> {
    ContinuedFraction::new(x.clone())?.matrix(k)
}

pub fn omega_window(x: &RealValue, ks: RangeInclusive<usize>, asserted: Option<Omega>) -> Result<OmegaWindow, Error> {
    ContinuedFraction::new(x.clone())?.omega_window(ks, asserted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;
    use crate::sl2::PlanePoint;
    use proptest::prelude::*;

    fn golden() -> RealValue {
        "surd:(-1+1*sqrt(5))/2".parse().unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&a| BigInt::from(a)).collect()
    }

    /// Gauss map run directly on the exact value.
    fn oracle_digits(x: &RealValue, n: usize) -> Vec<BigInt> {
        let mut out = Vec::new();
        let mut r = x.clone();
        for _ in 0..=n {
            let a = r.floor().unwrap();
            r = r.reciprocal_shift(&a).unwrap();
            out.push(a);
        }
        out
    }

    #[test]
    fn partial_quotient_examples() {
        assert_eq!(partial_quotients(&golden(), 5).unwrap(), ints(&[0, 1, 1, 1, 1, 1]));
        let s2: RealValue = "surd:(0+1*sqrt(2))/1".parse().unwrap();
        assert_eq!(partial_quotients(&s2, 4).unwrap(), ints(&[1, 2, 2, 2, 2]));
        assert_eq!(partial_quotients(&s2, 4).unwrap(), oracle_digits(&s2, 4));
        let r: RealValue = "rat:22/7".parse().unwrap();
        assert!(matches!(partial_quotients(&r, 3), Err(Error::RationalInput(1))));
        let f: RealValue = "cf:[3;7,15]".parse().unwrap();
        assert!(matches!(partial_quotients(&f, 1), Err(Error::RationalInput(2))));
    }

    #[test]
    fn convergent_examples() {
        let cf = ContinuedFraction::new(golden()).unwrap();
        let pq: Vec<(i64, i64)> = (0..6)
            .map(|k| {
                let (p, q) = cf.pq(k).unwrap();
                (p.try_into().unwrap(), q.try_into().unwrap())
            })
            .collect();
        assert_eq!(pq, vec![(0, 1), (1, 1), (1, 2), (2, 3), (3, 5), (5, 8)]);
        let signs: Vec<Ordering> = (0..4).map(|k| cf.convergent(k).unwrap().epsilon.signum().unwrap()).collect();
        assert_eq!(signs, vec![Ordering::Greater, Ordering::Less, Ordering::Greater, Ordering::Less]);
        let s2 = ContinuedFraction::new("surd:(0+1*sqrt(2))/1".parse().unwrap()).unwrap();
        let pq: Vec<(BigInt, BigInt)> = (0..4).map(|k| s2.pq(k).unwrap()).collect();
        assert_eq!(pq, vec![(1.into(), 1.into()), (3.into(), 2.into()), (7.into(), 5.into()), (17.into(), 12.into())]);
    }

    #[test]
    fn convergent_matrix_examples() {
        let cf = ContinuedFraction::new(golden()).unwrap();
        let m2 = cf.matrix(2).unwrap().matrix;
        assert_eq!(m2, UnimodularMatrix::new(2, -1, -1, 1).unwrap());
        assert_eq!(cf.matrix(3).unwrap().matrix, UnimodularMatrix::new(3, -2, 2, -1).unwrap());
        let image = m2.apply(&PlanePoint::from_slope(golden()));
        assert_eq!(image.x1.as_surd(), cf.convergent(2).unwrap().epsilon.as_surd());
        assert_eq!(image.x2.as_surd(), cf.abs_epsilon(1).unwrap().as_surd());
        for k in 1..20 {
            let m = cf.matrix(k).unwrap().matrix;
            assert_eq!(m.det(), BigInt::one());
            let (p, q) = cf.pq(k as isize).unwrap();
            assert_eq!(m.norm(), q.max(p.abs()));
        }
    }

    #[test]
    fn omega_window_examples() {
        let g = omega_window(&golden(), 5..=20, None).unwrap();
        assert!(g.max_ratio.unwrap() <= 1.3);
        assert!(g.ratios.windows(2).all(|w| w[1].1 <= w[0].1));
        assert_eq!(g.asserted, Some(Omega::one()));
        let lv: RealValue = "cf:[0;1]rule:mul(10)".parse().unwrap();
        let w = omega_window(&lv, 1..=6, None).unwrap();
        assert!(w.max_ratio.unwrap() > 2.0);
        assert_eq!(w.asserted, None);
    }

    #[test]
    fn periodic_cf_input_matches_surd() {
        let a = ContinuedFraction::new("cf:[0;1]repeat:[1]".parse().unwrap()).unwrap();
        let b = ContinuedFraction::new(golden()).unwrap();
        for k in 0..12 {
            assert_eq!(a.pq(k).unwrap(), b.pq(k).unwrap());
            assert_eq!(a.convergent(k as usize).unwrap().epsilon.as_surd(), b.convergent(k as usize).unwrap().epsilon.as_surd());
        }
    }

    #[test]
    fn decimal_input_stops_at_ambiguous_digit() {
        let d: RealValue = "dec:1.41421356237~1/1000000000000".parse().unwrap();
        let cf = ContinuedFraction::new(d).unwrap();
        assert_eq!(cf.partial_quotients(5).unwrap(), ints(&[1, 2, 2, 2, 2, 2]));
        match cf.partial_quotients(40) {
            Err(Error::PrecisionExhausted { bits, .. }) => assert_eq!(bits, precision_cap()),
            other => panic!("expected PrecisionExhausted, got {other:?}"),
        }
    }

    #[test]
    fn csv_export() {
        let cf = ContinuedFraction::new(golden()).unwrap();
        let mut buf = Vec::new();
        cf.write_csv(2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(3).unwrap(), "2,1,2,+,1,6,1,3");
    }

    fn quadratic() -> impl Strategy<Value = RealValue> {
        (-20i64..20, 1i64..6, 2i64..40, 1i64..12).prop_filter_map("square radicand", |(a, b, d, c)| {
            let r = (d as f64).sqrt() as i64;
            (r * r != d).then(|| RealValue::from_surd(crate::real::QuadSurd::new(a.into(), b.into(), d.into(), c.into()).unwrap()))
        })
    }

    proptest! {
        #[test]
        fn convergent_identities(x in quadratic()) {
            let cf = ContinuedFraction::new(x.clone()).unwrap();
            prop_assert_eq!(cf.partial_quotients(15).unwrap(), oracle_digits(&x, 15));
            for k in 0..15usize {
                let (p, q) = cf.pq(k as isize).unwrap();
                let (p0, q0) = cf.pq(k as isize - 1).unwrap();
                let expect = if k % 2 == 0 { -1 } else { 1 };
                prop_assert_eq!(&p * &q0 - &p0 * &q, BigInt::from(expect));
                let sign = cf.convergent(k).unwrap().epsilon.signum().unwrap();
                prop_assert_eq!(sign, if k % 2 == 0 { Ordering::Greater } else { Ordering::Less });
                cf.certify_epsilon_bounds(k).unwrap();
            }
        }

        #[test]
        fn matrix_action(x in quadratic(), k in 1usize..15) {
            let cf = ContinuedFraction::new(x.clone()).unwrap();
            let m = cf.matrix(k).unwrap().matrix;
            let image = m.apply(&PlanePoint::from_slope(x));
            let eps = cf.convergent(k).unwrap().epsilon;
            let prev = cf.abs_epsilon(k as isize - 1).unwrap();
            prop_assert_eq!(image.x1.as_surd(), eps.as_surd());
            prop_assert_eq!(image.x2.as_surd(), prev.as_surd());
        }
    }
}
