//! All of `SL(2, Z)` up to a norm bound, in a fixed order.
//!
//! Second rows `(v2, u2)` are the coprime pairs with `max(|v2|, |u2|) ≤ T`.
//! Each is lifted to one solution of `v1·u2 − u1·v2 = 1` with the extended
//! gcd, and the full solution set `(v1⁰ + t·v2, u1⁰ + t·u2)` is cut down to
//! the box. Matrices come out sorted lexicographically by `(v2, u2, v1, u1)`.

use std::io::Write;

use num_integer::Integer;

use super::UnimodularMatrix;
use crate::Error;

/// `[v1, u1, v2, u2]`.
pub type Entries = [i64; 4];

/// Coprime second rows in enumeration order.
pub fn second_rows(t: i64) -> impl Iterator<Item = (i64, i64)> {
    (-t..=t).flat_map(move |v2| {
        (-t..=t)
            .filter(move |&u2| v2.gcd(&u2) == 1)
            .map(move |u2| (v2, u2))
    })
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -Integer::div_floor(&-a, &b)
}

/// Range of `t` with `|a + t·c| ≤ bound`.
pub(crate) fn t_range(a: i64, c: i64, bound: i64) -> Option<(i64, i64)> {
    if c == 0 {
        return (a.abs() <= bound).then_some((i64::MIN, i64::MAX));
    }
    let (lo, hi) = if c > 0 {
        (ceil_div(-bound - a, c), Integer::div_floor(&(bound - a), &c))
    } else {
        (ceil_div(bound - a, c), Integer::div_floor(&(-bound - a), &c))
    };
    (lo <= hi).then_some((lo, hi))
}

/// `(v1, u1)` with `v1·u2 − u1·v2 = 1` for a coprime row.
pub(crate) fn lift(v2: i64, u2: i64) -> (i64, i64) {
    let e = u2.extended_gcd(&v2);
    // u2·x + v2·y = g with g = ±1
    (e.x * e.gcd, -e.y * e.gcd)
}

/// Matrices with second row `(v2, u2)` and norm at most `t`, sorted by `(v1, u1)`.
pub fn family(v2: i64, u2: i64, t: i64) -> impl Iterator<Item = Entries> {
    let (a, b) = lift(v2, u2);
    let range = t_range(a, v2, t)
        .zip(t_range(b, u2, t))
        .map(|((l1, h1), (l2, h2))| (l1.max(l2), h1.min(h2)))
        .filter(|(lo, hi)| lo <= hi);
    let (lo, hi) = range.unwrap_or((1, 0));
    // v1 grows with the parameter when v2 > 0; for v2 = 0, u1 grows with it when u2 > 0
    let ascending = v2 > 0 || (v2 == 0 && u2 > 0);
    let steps: Box<dyn Iterator<Item = i64>> = if ascending {
        Box::new(lo..=hi)
    } else {
        Box::new((lo..=hi).rev())
    };
    steps.map(move |s| [a + s * v2, b + s * u2, v2, u2])
}

/// Every integer matrix of determinant one with all entries in `[−t, t]`.
pub fn enumerate_norm_bounded(t: u64) -> impl Iterator<Item = UnimodularMatrix> {
    let t = t as i64;
    second_rows(t)
        .flat_map(move |(v2, u2)| family(v2, u2, t))
        .map(|[v1, u1, v2, u2]| UnimodularMatrix::from_entries(v1.into(), u1.into(), v2.into(), u2.into()))
}

/// Same set as [`enumerate_norm_bounded`], as plain integers.
pub fn enumerate_entries(t: u64) -> impl Iterator<Item = Entries> {
    let t = t as i64;
    second_rows(t).flat_map(move |(v2, u2)| family(v2, u2, t))
}

pub fn count_norm_bounded(t: u64) -> u64 {
    enumerate_entries(t).count() as u64
}

/// CSV dump `v1,u1,v2,u2,norm`.
pub fn write_enumeration_csv<W: Write>(t: u64, out: W) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidInput(format!("csv output failed: {e}"));
    w.write_record(["v1", "u1", "v2", "u2", "norm"]).map_err(io)?;
    for e in enumerate_entries(t) {
        let norm = e.iter().map(|v| v.abs()).max().expect("four entries");
        w.serialize((e[0], e[1], e[2], e[3], norm)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("csv output failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn brute(t: i64) -> BTreeSet<Entries> {
        let r = -t..=t;
        let mut out = BTreeSet::new();
        for v1 in r.clone() {
            for u1 in r.clone() {
                for v2 in r.clone() {
                    for u2 in r.clone() {
                        if v1 * u2 - u1 * v2 == 1 {
                            out.insert([v1, u1, v2, u2]);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn matches_direct_scan() {
        // the 3⁴ scan finds 20, e.g. [[1,1],[−1,0]] and [[0,1],[−1,1]] besides the 8 sign-permutation matrices
        assert_eq!(brute(1).len(), 20);
        assert_eq!(count_norm_bounded(1), 20);
        for t in 1..=6 {
            let fast: Vec<Entries> = enumerate_entries(t as u64).collect();
            let set: BTreeSet<Entries> = fast.iter().copied().collect();
            assert_eq!(set.len(), fast.len(), "duplicates at T = {t}");
            assert_eq!(set, brute(t), "T = {t}");
        }
    }

    #[test]
    fn order_is_lexicographic_in_v2_u2_v1_u1() {
        let key = |e: &Entries| (e[2], e[3], e[0], e[1]);
        let all: Vec<Entries> = enumerate_entries(7).collect();
        assert!(all.windows(2).all(|w| key(&w[0]) < key(&w[1])));
    }

    #[test]
    fn nesting_and_negation() {
        let big: BTreeSet<Entries> = enumerate_entries(8).collect();
        for t in [1u64, 2, 3, 5] {
            let small: BTreeSet<Entries> = enumerate_entries(t).collect();
            let filtered: BTreeSet<Entries> = big
                .iter()
                .filter(|e| e.iter().all(|v| v.unsigned_abs() <= t))
                .copied()
                .collect();
            assert_eq!(small, filtered);
        }
        assert!(big.iter().all(|e| big.contains(&e.map(|v| -v))));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut buf = Vec::new();
        write_enumeration_csv(1, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 21);
        assert!(text.starts_with("v1,u1,v2,u2,norm\n-1,0,-1,-1,1\n"));
    }
}
