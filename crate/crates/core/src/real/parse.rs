//! Text grammar for real inputs.
//!
//! ```text
//! rat:<p>/<q>                    rational (also a bare integer, fraction or decimal)
//! surd:(<a>+<b>*sqrt(<d>))/<c>   (a + b√d)/c
//! cf:[a0;a1,...]                 finite continued fraction
//! cf:[a0;a1,...]repeat:[...]     eventually periodic
//! cf:[a0;a1,...]rule:mul(<m>)    a_{k+1} = m·a_k after the listed digits
//! cf:[a0;a1,...]rule:pow(<e>)    a_{k+1} = a_k^e after the listed digits
//! dec:<digits>~<radius>          the interval digits ± radius
//! ```

use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use regex::Regex;

use super::{CfDigits, DigitRule, QuadSurd, RealValue};
use crate::Error;

/// A parsed real input before canonicalization.
#[derive(Clone, Debug)]
pub enum RealInput {
    Rational(BigRational),
    QuadraticSurd(QuadSurd),
    CfDigits(CfDigits),
    DecimalInterval { digits: String, radius: BigRational },
}

impl RealInput {
    pub fn into_value(self) -> Result<RealValue, Error> {
        match self {
            RealInput::Rational(r) => Ok(RealValue::from_rational(r)),
            RealInput::QuadraticSurd(s) => Ok(RealValue::from_surd(s)),
            RealInput::CfDigits(d) => RealValue::from_cf(d),
            RealInput::DecimalInterval { digits, radius } => RealValue::decimal(&digits, radius),
        }
    }
}

fn bad(s: &str, why: &str) -> Error {
    Error::InvalidInput(format!("cannot parse {s:?}: {why}"))
}

fn int(s: &str) -> Result<BigInt, Error> {
    s.trim().parse().map_err(|_| bad(s, "expected an integer"))
}

/// Exact value of a decimal literal such as `-0.41421` or `1.5e-3`.
pub(crate) fn parse_decimal(s: &str) -> Result<BigRational, Error> {
    let t = s.trim();
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad(s, "bad exponent"))?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty()
        || !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad(s, "expected decimal digits"));
    }
    let digits: BigInt = format!("{whole}{frac}").parse().map_err(|_| bad(s, "expected decimal digits"))?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        BigRational::from_integer(digits * Pow::pow(&ten, scale as u32))
    } else {
        BigRational::new(digits, Pow::pow(&ten, (-scale) as u32))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// A rational written as `p`, `p/q` or a decimal literal.
pub(crate) fn parse_rational(s: &str) -> Result<BigRational, Error> {
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let q = int(q)?;
        if q == BigInt::from(0) {
            return Err(Error::DivisionByZero);
        }
        return Ok(BigRational::new(int(p)?, q));
    }
    parse_decimal(t)
}

fn int_list(s: &str) -> Result<Vec<BigInt>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(int)
        .collect()
}

fn surd_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^\(\s*([+-]?\d+)\s*([+-])\s*(\d+)\s*\*\s*sqrt\(\s*(\d+)\s*\)\s*\)\s*(?:/\s*([+-]?\d+))?$",
        )
        .expect("static regex")
    })
}

fn cf_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^\[\s*([+-]?\d+)\s*(?:;([\d,\s]*))?\]\s*(?:repeat:\[([\d,\s]+)\]|rule:(mul|pow)\(\s*(\d+)\s*\))?$",
        )
        .expect("static regex")
    })
}

fn parse_surd(body: &str, full: &str) -> Result<QuadSurd, Error> {
    let caps = surd_regex()
        .captures(body.trim())
        .ok_or_else(|| bad(full, "expected (a+b*sqrt(d))/c"))?;
    let a = int(&caps[1])?;
    let mut b = int(&caps[3])?;
    if &caps[2] == "-" {
        b = -b;
    }
    let d = int(&caps[4])?;
    let c = caps.get(5).map(|m| int(m.as_str())).transpose()?.unwrap_or_else(BigInt::one);
    QuadSurd::new(a, b, d, c)
}

fn parse_cf(body: &str, full: &str) -> Result<CfDigits, Error> {
    let caps = cf_regex()
        .captures(body.trim())
        .ok_or_else(|| bad(full, "expected [a0;a1,...] with optional repeat:[...] or rule:mul(m)/pow(e)"))?;
    let a0 = int(&caps[1])?;
    let prefix = caps.get(2).map(|m| int_list(m.as_str())).transpose()?.unwrap_or_default();
    if let Some(period) = caps.get(3) {
        return CfDigits::periodic(a0, prefix, int_list(period.as_str())?);
    }
    if let Some(kind) = caps.get(4) {
        let arg = &caps[5];
        let rule = match kind.as_str() {
            "mul" => DigitRule::Multiply(int(arg)?),
            _ => DigitRule::Power(arg.parse().map_err(|_| bad(full, "exponent too large"))?),
        };
        if prefix.is_empty() {
            return Err(bad(full, "a digit rule needs at least one listed quotient"));
        }
        return CfDigits::with_rule(a0, prefix, rule);
    }
    CfDigits::finite(a0, prefix)
}

impl FromStr for RealInput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let t = s.trim();
        if let Some(body) = t.strip_prefix("rat:") {
            return Ok(RealInput::Rational(parse_rational(body)?));
        }
        if let Some(body) = t.strip_prefix("surd:") {
            return Ok(RealInput::QuadraticSurd(parse_surd(body, s)?));
        }
        if let Some(body) = t.strip_prefix("cf:") {
            return Ok(RealInput::CfDigits(parse_cf(body, s)?));
        }
        if let Some(body) = t.strip_prefix("dec:") {
            let (digits, radius) = body
                .split_once('~')
                .ok_or_else(|| bad(s, "expected dec:<digits>~<radius>"))?;
            parse_decimal(digits)?;
            return Ok(RealInput::DecimalInterval {
                digits: digits.trim().to_string(),
                radius: parse_rational(radius)?,
            });
        }
        parse_rational(t)
            .map(RealInput::Rational)
            .map_err(|_| bad(s, "unknown format; use rat:, surd:, cf: or dec:"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_decimal("0.125").unwrap(), BigRational::new(1.into(), 8.into()));
        assert_eq!(parse_decimal("-2.5e1").unwrap(), BigRational::from_integer((-25).into()));
        assert!(parse_decimal("1.2.3").is_err());
        assert!(parse_decimal(".").is_err());
    }

    #[test]
    fn surd_forms() {
        let g: RealInput = "surd:(-1+1*sqrt(5))/2".parse().unwrap();
        let h: RealInput = "surd:(-1 - 1*sqrt(5))".parse().unwrap();
        match (g, h) {
            (RealInput::QuadraticSurd(g), RealInput::QuadraticSurd(h)) => {
                assert_eq!(g.c(), &BigInt::from(2));
                assert_eq!(h.b(), &BigInt::from(-1));
            }
            _ => panic!("expected surds"),
        }
        assert!("surd:(1+2*sqrt(-3))/2".parse::<RealInput>().is_err());
        assert!(matches!(
            "surd:(1+1*sqrt(5))/0".parse::<RealInput>(),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn cf_forms() {
        for ok in ["cf:[0;1,1]", "cf:[0;1]repeat:[1]", "cf:[1;]repeat:[2]", "cf:[0;1]rule:pow(3)", "cf:[3]"] {
            assert!(ok.parse::<RealInput>().is_ok(), "{ok}");
        }
        for err in ["cf:[0;0,1]", "cf:[0;1]repeat:[]", "cf:0;1", "cf:[0]rule:mul(2)"] {
            assert!(err.parse::<RealInput>().is_err(), "{err}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "rat:22/7",
            "surd:(-1+1*sqrt(5))/2",
            "cf:[0;1,2]repeat:[3,4]",
            "cf:[0;1]rule:mul(10)",
            "dec:0.41421~1/1000",
        ] {
            let v: RealValue = s.parse().unwrap();
            assert_eq!(v.to_string(), s);
        }
    }
}
