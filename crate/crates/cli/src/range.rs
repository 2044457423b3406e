//! Index ranges such as `6`, `6..12`, `odd 9..21`.

use std::ops::RangeInclusive;

use orbit_approx::Error;

/// An inclusive range of indices, optionally restricted to one parity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexRange {
    pub bounds: RangeInclusive<usize>,
    pub parity: Option<usize>,
}

impl IndexRange {
    pub fn parse(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidInput(format!("cannot parse index range {s:?}; try 6, 6..12 or odd 9..21"));
        let s = s.trim();
        let (parity, rest) = match s.split_once(|c: char| c.is_whitespace() || c == ':') {
            Some(("odd", r)) => (Some(1), r.trim()),
            Some(("even", r)) => (Some(0), r.trim()),
            _ => (None, s),
        };
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let bounds = match rest.split_once("..") {
            Some((a, b)) => num(a)?..=num(b.strip_prefix('=').unwrap_or(b))?,
            None => {
                let k = num(rest)?;
                k..=k
            }
        };
        if bounds.is_empty() {
            return Err(bad());
        }
        Ok(IndexRange { bounds, parity })
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bounds.clone().filter(|k| self.parity.is_none_or(|p| k % 2 == p))
    }
}
