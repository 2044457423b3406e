//! Continued-fraction digit streams `[a0; a1, a2, ...]`.

use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, Zero};

use super::surd::QuadSurd;
use crate::Error;

/// Generator for the partial quotients after the explicit prefix.
#[derive(Clone)]
pub enum DigitRule {
    /// Each new quotient is the previous one times the factor.
    Multiply(BigInt),
    /// Each new quotient is the previous one raised to the exponent.
    Power(u32),
    /// Arbitrary rule `k ↦ a_k` (1-based, absolute index) with a display label.
    Custom {
        label: String,
        rule: Arc<dyn Fn(usize) -> BigInt + Send + Sync>,
    },
}

impl fmt::Debug for DigitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DigitRule::Multiply(m) => write!(f, "Multiply({m})"),
            DigitRule::Power(e) => write!(f, "Power({e})"),
            DigitRule::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Tail {
    Finite,
    Periodic(Vec<BigInt>),
    Rule(DigitRule),
}

#[derive(Debug)]
struct TailSource {
    prefix: Vec<BigInt>,
    tail: Tail,
    cache: Mutex<Vec<BigInt>>,
}

impl TailSource {
    /// The `k`-th tail digit (`k ≥ 1`), `None` past the end of a finite expansion.
    fn digit(&self, k: usize) -> Result<Option<BigInt>, Error> {
        if k <= self.prefix.len() {
            return Ok(Some(self.prefix[k - 1].clone()));
        }
        match &self.tail {
            Tail::Finite => Ok(None),
            Tail::Periodic(period) => {
                let i = (k - self.prefix.len() - 1) % period.len();
                Ok(Some(period[i].clone()))
            }
            Tail::Rule(DigitRule::Custom { label, rule }) => {
                let a = rule(k);
                if a < BigInt::one() {
                    return Err(Error::InvalidInput(format!(
                        "digit rule {label} produced a_{k} = {a} < 1"
                    )));
                }
                Ok(Some(a))
            }
            Tail::Rule(rule) => {
                let mut cache = self.cache.lock().expect("digit cache poisoned");
                let start = self.prefix.len() + cache.len();
                for _ in start..k {
                    let prev = cache
                        .last()
                        .or_else(|| self.prefix.last())
                        .cloned()
                        .unwrap_or_else(BigInt::one);
                    let next = match rule {
                        DigitRule::Multiply(m) => prev * m,
                        DigitRule::Power(e) => Pow::pow(prev, *e),
                        DigitRule::Custom { .. } => unreachable!(),
                    };
                    cache.push(next);
                }
                Ok(Some(cache[k - self.prefix.len() - 1].clone()))
            }
        }
    }
}

/// A simple continued fraction given digit by digit.
#[derive(Clone, Debug)]
pub struct CfDigits {
    a0: BigInt,
    source: Arc<TailSource>,
    offset: usize,
}

impl CfDigits {
    fn build(a0: BigInt, mut prefix: Vec<BigInt>, tail: Tail) -> Result<Self, Error> {
        if let Some(bad) = prefix.iter().find(|a| !a.is_positive()) {
            return Err(Error::InvalidInput(format!("partial quotient {bad} < 1")));
        }
        match &tail {
            Tail::Periodic(p) if p.is_empty() => {
                return Err(Error::InvalidInput("empty periodic block".into()))
            }
            Tail::Periodic(p) => {
                if let Some(bad) = p.iter().find(|a| !a.is_positive()) {
                    return Err(Error::InvalidInput(format!("partial quotient {bad} < 1")));
                }
            }
            Tail::Rule(DigitRule::Multiply(m)) if !m.is_positive() => {
                return Err(Error::InvalidInput("multiplier must be positive".into()))
            }
            Tail::Rule(DigitRule::Power(0)) => {
                return Err(Error::InvalidInput("exponent must be positive".into()))
            }
            Tail::Finite
                // [.., a, 1] = [.., a + 1]
                if prefix.len() >= 2 && prefix.last().is_some_and(|a| a.is_one()) => {
                    prefix.pop();
                    *prefix.last_mut().expect("nonempty") += 1;
                }
            _ => {}
        }
        let mut a0 = a0;
        if matches!(tail, Tail::Finite) && prefix.len() == 1 && prefix[0].is_one() {
            // [a0; 1] = a0 + 1
            prefix.clear();
            a0 += 1;
        }
        Ok(CfDigits {
            a0,
            source: Arc::new(TailSource {
                prefix,
                tail,
                cache: Mutex::new(Vec::new()),
            }),
            offset: 0,
        })
    }

    pub fn finite(a0: BigInt, digits: Vec<BigInt>) -> Result<Self, Error> {
        Self::build(a0, digits, Tail::Finite)
    }

    pub fn periodic(a0: BigInt, prefix: Vec<BigInt>, period: Vec<BigInt>) -> Result<Self, Error> {
        Self::build(a0, prefix, Tail::Periodic(period))
    }

    pub fn with_rule(a0: BigInt, prefix: Vec<BigInt>, rule: DigitRule) -> Result<Self, Error> {
        Self::build(a0, prefix, Tail::Rule(rule))
    }

    pub fn a0(&self) -> &BigInt {
        &self.a0
    }

    /// The `k`-th partial quotient (`a_0` for `k = 0`); `None` past the end.
    pub fn digit(&self, k: usize) -> Result<Option<BigInt>, Error> {
        if k == 0 {
            return Ok(Some(self.a0.clone()));
        }
        self.source.digit(k + self.offset)
    }

    /// Number of partial quotients after `a_0` when the expansion is finite.
    pub fn finite_len(&self) -> Option<usize> {
        matches!(self.source.tail, Tail::Finite)
            .then(|| self.source.prefix.len().saturating_sub(self.offset))
    }

    pub fn is_finite(&self) -> bool {
        self.finite_len().is_some()
    }

    /// `[a1; a2, ...]`, i.e. `1/(x − a0)`; `None` if `x = a0`.
    pub fn shift(&self) -> Result<Option<CfDigits>, Error> {
        Ok(self.digit(1)?.map(|a1| CfDigits {
            a0: a1,
            source: self.source.clone(),
            offset: self.offset + 1,
        }))
    }

    /// Convergents `(p_n, q_n)` for `n = 0..` until `q_n·q_{n+1} ≥ 2^bits` or
    /// the expansion ends.
    pub(crate) fn convergents_for_bits(&self, bits: u32) -> Result<Vec<(BigInt, BigInt)>, Error> {
        let target = BigInt::one() << bits;
        let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
        let (mut p1, mut q1) = (self.a0.clone(), BigInt::one());
        let mut out = vec![(p1.clone(), q1.clone())];
        let mut k = 1;
        while let Some(a) = self.digit(k)? {
            let p2 = &a * &p1 + &p0;
            let q2 = &a * &q1 + &q0;
            let done = &q1 * &q2 >= target;
            out.push((p2.clone(), q2.clone()));
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
            if done {
                break;
            }
            k += 1;
        }
        Ok(out)
    }

    /// Exact value for finite or eventually periodic expansions.
    pub(crate) fn exact_value(&self) -> Result<Option<QuadSurd>, Error> {
        let prefix: Vec<BigInt> = self.source.prefix.iter().skip(self.offset).cloned().collect();
        match &self.source.tail {
            Tail::Rule(_) => Ok(None),
            Tail::Finite => {
                // fold from the back: x = a + 1/x'
                let mut value = QuadSurd::from_integer(prefix.last().cloned().unwrap_or_else(|| self.a0.clone()));
                let mut rest: Vec<BigInt> = std::iter::once(self.a0.clone()).chain(prefix).collect();
                rest.pop();
                for a in rest.into_iter().rev() {
                    value = QuadSurd::from_integer(a).checked_add(&value.recip()?).expect("rational");
                }
                Ok(Some(value))
            }
            Tail::Periodic(period) => {
                // the offset may point inside the periodic part
                let into_period = self.offset.saturating_sub(self.source.prefix.len());
                let mut rotated = period.clone();
                rotated.rotate_left(into_period % period.len());
                let tail = purely_periodic_value(&rotated)?;
                let mut value = tail;
                for a in std::iter::once(self.a0.clone()).chain(prefix).collect::<Vec<_>>().into_iter().rev() {
                    value = QuadSurd::from_integer(a).checked_add(&value.recip()?).expect("same field");
                }
                Ok(Some(value))
            }
        }
    }
}

/// Value `t > 1` of the purely periodic expansion `[p0; p1, ..., p_{m-1}, p0, ...]`.
fn purely_periodic_value(period: &[BigInt]) -> Result<QuadSurd, Error> {
    // t = (P00 t + P01)/(P10 t + P11) with P the product of [[a, 1], [1, 0]]
    let (mut m00, mut m01, mut m10, mut m11) =
        (BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one());
    for a in period {
        let n00 = &m00 * a + &m01;
        let n10 = &m10 * a + &m11;
        (m00, m01, m10, m11) = (n00, m00, n10, m10);
    }
    // P10 t² + (P11 − P00) t − P01 = 0, positive root
    let disc = (&m11 - &m00) * (&m11 - &m00) + BigInt::from(4) * &m10 * &m01;
    QuadSurd::new(&m00 - &m11, BigInt::one(), disc, BigInt::from(2) * &m10)
}

impl fmt::Display for CfDigits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix: Vec<String> = self
            .source
            .prefix
            .iter()
            .skip(self.offset)
            .map(|a| a.to_string())
            .collect();
        write!(f, "cf:[{};{}]", self.a0, prefix.join(","))?;
        match &self.source.tail {
            Tail::Finite => Ok(()),
            Tail::Periodic(p) => {
                let into = self.offset.saturating_sub(self.source.prefix.len());
                let mut p = p.clone();
                let len = p.len();
                p.rotate_left(into % len);
                let p: Vec<String> = p.iter().map(|a| a.to_string()).collect();
                write!(f, "repeat:[{}]", p.join(","))
            }
            Tail::Rule(DigitRule::Multiply(m)) => write!(f, "rule:mul({m})"),
            Tail::Rule(DigitRule::Power(e)) => write!(f, "rule:pow({e})"),
            Tail::Rule(DigitRule::Custom { label, .. }) => write!(f, "rule:{label}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&a| BigInt::from(a)).collect()
    }

    #[test]
    fn periodic_golden_is_exact() {
        let cf = CfDigits::periodic(0.into(), ints(&[1]), ints(&[1])).unwrap();
        let v = cf.exact_value().unwrap().unwrap();
        assert_eq!(v, QuadSurd::new((-1).into(), 1.into(), 5.into(), 2.into()).unwrap());
        let sqrt2 = CfDigits::periodic(1.into(), vec![], ints(&[2])).unwrap();
        assert_eq!(
            sqrt2.exact_value().unwrap().unwrap(),
            QuadSurd::new(0.into(), 1.into(), 2.into(), 1.into()).unwrap()
        );
    }

    #[test]
    fn finite_is_rational() {
        let cf = CfDigits::finite(3.into(), ints(&[7])).unwrap();
        let v = cf.exact_value().unwrap().unwrap();
        assert_eq!(v.to_rational().unwrap(), num_rational::BigRational::new(22.into(), 7.into()));
        // trailing 1 merges
        let cf = CfDigits::finite(3.into(), ints(&[6, 1])).unwrap();
        assert_eq!(cf.finite_len(), Some(1));
    }

    #[test]
    fn rules_generate_digits() {
        let cf = CfDigits::with_rule(0.into(), ints(&[1]), DigitRule::Multiply(10.into())).unwrap();
        let d: Vec<BigInt> = (1..=4).map(|k| cf.digit(k).unwrap().unwrap()).collect();
        assert_eq!(d, ints(&[1, 10, 100, 1000]));
        let cf = CfDigits::with_rule(0.into(), ints(&[1, 2]), DigitRule::Power(3)).unwrap();
        assert_eq!(cf.digit(4).unwrap().unwrap(), BigInt::from(512));
    }

    #[test]
    fn shift_walks_the_stream() {
        let cf = CfDigits::periodic(0.into(), ints(&[1, 2]), ints(&[3, 4])).unwrap();
        let s = cf.shift().unwrap().unwrap().shift().unwrap().unwrap().shift().unwrap().unwrap();
        assert_eq!(s.a0(), &BigInt::from(3));
        assert_eq!(s.digit(1).unwrap().unwrap(), BigInt::from(4));
        let direct = CfDigits::periodic(3.into(), vec![], ints(&[4, 3])).unwrap();
        assert_eq!(s.exact_value().unwrap(), direct.exact_value().unwrap());
    }
}
