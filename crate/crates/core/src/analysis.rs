//! Best-approximation staircases, empirical exponents, and exhaustive checks
//! of the explicit lower bounds.
//!
//! The oracle works band by band over the norm budget. Inside a band it only
//! visits matrices whose residual can still beat the best one found so far:
//! second rows are solved for from `|v₂x₁ + u₂x₂ − y₂| < θ`, and along each
//! family `(v₁⁰ + t·v₂, u₁⁰ + t·u₂)` the first coordinate moves linearly in
//! `t`. Filtering uses 64-bit fixed-point enclosures; every decision that the
//! enclosures cannot settle falls back to exact comparison.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::constructions::{
    approx_irrational_slope, approx_origin, approx_rational_slope, json_matrix, normalize,
    select_indices_small_omega, TargetSlope,
};
use crate::contfrac::{ContinuedFraction, Omega};
use crate::real::{precision_cap, RealValue};
use crate::sl2::{family, lift, t_range, Entries, PlanePoint, UnimodularMatrix};
use crate::Error;

/// Largest norm budget the oracle accepts unless configured otherwise.
pub const DEFAULT_ORACLE_CAP: u64 = 10_000;

/// Hard ceiling that keeps the fixed-point arithmetic inside `i128`.
const FIXED_POINT_LIMIT: u64 = 1 << 20;

const FX_BITS: u32 = 64;
const FX_ONE: f64 = 18_446_744_073_709_551_616.0;

/// Interval `[lo, hi]·2^-64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Fx {
    lo: i128,
    hi: i128,
}

impl Fx {
    fn of(v: &RealValue) -> Result<Fx, Error> {
        let too_big = || Error::InvalidInput(format!("{v} is too large for the oracle (limit 2^40)"));
        let mut bits = 96;
        loop {
            let e = v
                .enclose(bits)
                .ok_or_else(|| Error::InvalidInput(format!("cannot enclose {v}")))?
                .rescale(FX_BITS);
            let lo = e.lo.to_i128().ok_or_else(too_big)?;
            let hi = e.hi.to_i128().ok_or_else(too_big)?;
            if lo.unsigned_abs().max(hi.unsigned_abs()) >= 1 << 104 {
                return Err(too_big());
            }
            if hi - lo <= 4 || bits >= precision_cap() || bits >= 384 {
                return Ok(Fx { lo, hi });
            }
            bits *= 2;
        }
    }

    fn mul(self, n: i64) -> Fx {
        let n = n as i128;
        if n >= 0 {
            Fx { lo: self.lo * n, hi: self.hi * n }
        } else {
            Fx { lo: self.hi * n, hi: self.lo * n }
        }
    }

    fn add(self, o: Fx) -> Fx {
        Fx { lo: self.lo + o.lo, hi: self.hi + o.hi }
    }

    fn sub(self, o: Fx) -> Fx {
        Fx { lo: self.lo - o.hi, hi: self.hi - o.lo }
    }

    fn abs(self) -> Fx {
        if self.lo >= 0 {
            self
        } else if self.hi <= 0 {
            Fx { lo: -self.hi, hi: -self.lo }
        } else {
            Fx { lo: 0, hi: (-self.lo).max(self.hi) }
        }
    }

    fn max(self, o: Fx) -> Fx {
        Fx { lo: self.lo.max(o.lo), hi: self.hi.max(o.hi) }
    }

    fn mid(self) -> f64 {
        (self.lo as f64 + self.hi as f64) / 2.0 / FX_ONE
    }

    fn upper_f64(self) -> f64 {
        self.hi as f64 / FX_ONE
    }
}

fn norm_of(e: &Entries) -> u64 {
    e.iter().map(|v| v.unsigned_abs()).max().expect("four entries")
}

fn sort_key(e: &Entries) -> (i64, i64, i64, i64) {
    (e[2], e[3], e[0], e[1])
}

fn matrix_of(e: &Entries) -> UnimodularMatrix {
    UnimodularMatrix::new(e[0], e[1], e[2], e[3]).expect("enumerated matrices are unimodular")
}

/// `|γx − y|` together with the linear form that attains it.
///
/// Distinct matrices often share the dominant row, so their residuals are
/// equal as numbers; comparing the forms first settles those ties without
/// asking interval arithmetic to decide an equality.
struct Residual {
    value: RealValue,
    /// Coordinate index and row `(v, u)`; for the origin target the index is
    /// dropped and the row taken up to sign.
    form: (usize, BigInt, BigInt),
}

impl Residual {
    fn of(x: &PlanePoint, y: &PlanePoint, g: &UnimodularMatrix, y_origin: bool, hint: Option<usize>) -> Result<Self, Error> {
        let p = g.apply(x).sub(y);
        let (a1, a2) = (p.x1.abs(), p.x2.abs());
        let i = match hint {
            Some(i) => i,
            None if a1.cmp_value(&a2)? == Ordering::Less => 1,
            None => 0,
        };
        let [v1, u1, v2, u2] = g.entries();
        let (v, u) = if i == 0 { (v1.clone(), u1.clone()) } else { (v2.clone(), u2.clone()) };
        let form = if y_origin {
            let flip = v.is_negative() || (v.is_zero() && u.is_negative());
            if flip { (0, -v, -u) } else { (0, v, u) }
        } else {
            (i, v, u)
        };
        Ok(Residual { value: if i == 0 { a1 } else { a2 }, form })
    }

    fn cmp(&self, other: &Self) -> Result<Ordering, Error> {
        if self.form == other.form {
            return Ok(Ordering::Equal);
        }
        self.value.cmp_value(&other.value)
    }
}

#[derive(Clone, Copy, Debug)]
struct Cand {
    e: Entries,
    norm: u64,
    r: Fx,
}

/// `x`, `y` and their fixed-point images.
struct Oracle<'a> {
    x: &'a PlanePoint,
    y: &'a PlanePoint,
    fx: [Fx; 4],
    f: [f64; 4],
    y_origin: bool,
}

impl<'a> Oracle<'a> {
    fn new(x: &'a PlanePoint, y: &'a PlanePoint) -> Result<Self, Error> {
        let fx = [Fx::of(&x.x1)?, Fx::of(&x.x2)?, Fx::of(&y.x1)?, Fx::of(&y.x2)?];
        Ok(Oracle {
            x,
            y,
            fx,
            f: fx.map(Fx::mid),
            y_origin: y.is_origin()?,
        })
    }

    /// `v·x₁ + u·x₂ − c`.
    fn linear(&self, v: i64, u: i64, c: Fx) -> Fx {
        self.fx[0].mul(v).add(self.fx[1].mul(u)).sub(c)
    }

    fn residual_fx(&self, e: &Entries) -> Fx {
        let l1 = self.linear(e[0], e[1], self.fx[2]).abs();
        let l2 = self.linear(e[2], e[3], self.fx[3]).abs();
        l1.max(l2)
    }

    fn residual_exact(&self, e: &Entries) -> Result<Residual, Error> {
        let l1 = self.linear(e[0], e[1], self.fx[2]).abs();
        let l2 = self.linear(e[2], e[3], self.fx[3]).abs();
        let hint = if l1.lo > l2.hi {
            Some(0)
        } else if l2.lo > l1.hi {
            Some(1)
        } else {
            None
        };
        Residual::of(self.x, self.y, &matrix_of(e), self.y_origin, hint)
    }

    fn cand(&self, e: Entries) -> Cand {
        Cand { e, norm: norm_of(&e), r: self.residual_fx(&e) }
    }

    /// Whether `a` has a strictly smaller residual than `b`.
    fn less(&self, a: &Cand, b: &Cand) -> Result<bool, Error> {
        if a.r.hi < b.r.lo {
            return Ok(true);
        }
        if a.r.lo >= b.r.hi {
            return Ok(false);
        }
        let ra = self.residual_exact(&a.e)?;
        let rb = self.residual_exact(&b.e)?;
        Ok(ra.cmp(&rb)? == Ordering::Less)
    }

    /// Integers `n` in `[−t, t]` that can satisfy `|n·p + m·q − c| < θ`, given `m`.
    fn solve_row(&self, m: i64, p: f64, q: f64, c: f64, theta: Option<f64>, t: i64) -> (i64, i64) {
        match theta {
            Some(th) if p.abs() > 1e-9 => {
                let a = (c - m as f64 * q - th) / p;
                let b = (c - m as f64 * q + th) / p;
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                ((a.floor() - 1.0).max(-t as f64) as i64, (b.ceil() + 1.0).min(t as f64) as i64)
            }
            _ => (-t, t),
        }
    }

    /// Second rows that can still beat `θ`, as `(v₂, u₂)`.
    fn rows(&self, outer: i64, t: i64, theta: Option<Fx>) -> Vec<(i64, i64)> {
        let th = theta.map(Fx::upper_f64);
        let [x1, x2, _, y2] = self.f;
        let by_v2 = x2.abs() >= x1.abs();
        let (lo, hi) = if by_v2 {
            self.solve_row(outer, x2, x1, y2, th, t)
        } else {
            self.solve_row(outer, x1, x2, y2, th, t)
        };
        (lo..=hi)
            .map(|inner| if by_v2 { (outer, inner) } else { (inner, outer) })
            .filter(|&(v2, u2)| num_integer::Integer::gcd(&v2, &u2) == 1)
            .filter(|&(v2, u2)| match theta {
                Some(th) => self.linear(v2, u2, self.fx[3]).abs().lo < th.hi,
                None => true,
            })
            .collect()
    }

    /// Matrices with `t_prev < |γ| ≤ t` whose residual may be below `θ`.
    fn band(&self, t_prev: u64, t: u64, theta: Option<Fx>) -> (Vec<Cand>, u64) {
        let ti = t as i64;
        let [x1, x2, y1, _] = self.f;
        let per_outer = |outer: i64| -> (Vec<Cand>, u64) {
            let mut out = Vec::new();
            let mut seen = 0u64;
            for (v2, u2) in self.rows(outer, ti, theta) {
                let (a, b) = lift(v2, u2);
                let Some(((l1, h1), (l2, h2))) = t_range(a, v2, ti).zip(t_range(b, u2, ti)) else {
                    continue;
                };
                let (mut lo, mut hi) = (l1.max(l2), h1.min(h2));
                if let Some(th) = theta {
                    let w = v2 as f64 * x1 + u2 as f64 * x2;
                    if w.abs() > 1e-9 {
                        let l0 = a as f64 * x1 + b as f64 * x2 - y1;
                        let th = th.upper_f64();
                        let (s1, s2) = ((-th - l0) / w, (th - l0) / w);
                        let (s1, s2) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
                        lo = lo.max((s1.floor() - 1.0).max(lo as f64) as i64);
                        hi = hi.min((s2.ceil() + 1.0).min(hi as f64) as i64);
                    }
                }
                for s in lo..=hi {
                    let e = [a + s * v2, b + s * u2, v2, u2];
                    let norm = norm_of(&e);
                    if norm <= t_prev {
                        continue;
                    }
                    seen += 1;
                    let c = Cand { e, norm, r: self.residual_fx(&e) };
                    if theta.is_none_or(|th| c.r.lo < th.hi) {
                        out.push(c);
                    }
                }
            }
            (out, seen)
        };
        let (mut cands, seen) = (-ti..=ti)
            .into_par_iter()
            .map(per_outer)
            .reduce(|| (Vec::new(), 0), |(mut a, n), (b, m)| {
                a.extend(b);
                (a, n + m)
            });
        cands.sort_by_key(|c| (c.norm, sort_key(&c.e)));
        (cands, seen)
    }
}

/// Where a staircase comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StaircaseSource {
    /// Exact minima over all matrices up to each norm.
    Oracle,
    /// Upper envelope of the explicit constructions.
    Constructions,
}

impl fmt::Display for StaircaseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StaircaseSource::Oracle => "oracle",
            StaircaseSource::Constructions => "constructions",
        })
    }
}

/// The three regimes for the target point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    Origin,
    Rational,
    Irrational,
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetKind::Origin => "origin",
            TargetKind::Rational => "rational slope",
            TargetKind::Irrational => "irrational slope",
        })
    }
}

pub fn target_kind(y: &PlanePoint) -> Result<TargetKind, Error> {
    if y.is_origin()? {
        return Ok(TargetKind::Origin);
    }
    if y.x2.signum()?.is_eq() {
        return Ok(TargetKind::Rational);
    }
    Ok(match TargetSlope::of_point(y)? {
        TargetSlope::Rational { .. } => TargetKind::Rational,
        TargetSlope::Irrational { .. } => TargetKind::Irrational,
    })
}

/// A matrix whose residual beats every matrix of smaller or equal norm seen before it.
#[derive(Clone, Debug)]
pub struct Record {
    pub gamma: UnimodularMatrix,
    pub norm: u64,
    pub residual: RealValue,
    /// For logs and plots only.
    pub residual_approx: f64,
}

#[derive(Clone, Debug)]
pub struct GridPoint {
    pub t: u64,
    /// Index of the record realizing `D(t)`.
    pub record: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RecordSequence {
    pub records: Vec<Record>,
    pub grid: Vec<GridPoint>,
    pub source: StaircaseSource,
    pub kind: TargetKind,
    /// Matrices whose residual was evaluated.
    pub examined: u64,
}

impl RecordSequence {
    /// The record realizing `D(t)`, meaningful up to the largest grid value.
    pub fn d(&self, t: u64) -> Option<&Record> {
        let i = self.records.partition_point(|r| r.norm <= t);
        i.checked_sub(1).map(|i| &self.records[i])
    }

    pub fn to_json(&self) -> Value {
        let rec = |r: &Record| {
            json!({
                "norm": r.norm,
                "gamma": json_matrix(&r.gamma),
                "residual": r.residual.to_string(),
                "residual_approx": r.residual_approx,
            })
        };
        json!({
            "source": self.source.to_string(),
            "kind": self.kind.to_string(),
            "examined": self.examined,
            "records": self.records.iter().map(rec).collect::<Vec<_>>(),
            "staircase": self.grid.iter().map(|g| json!({
                "T": g.t,
                "record": g.record,
                "D": g.record.map(|i| self.records[i].residual_approx),
            })).collect::<Vec<_>>(),
        })
    }

    /// `norm,v1,u1,v2,u2,residual`.
    pub fn write_records_csv<W: Write>(&self, out: W) -> Result<(), Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["norm", "v1", "u1", "v2", "u2", "residual"]).map_err(csv_err)?;
        for r in &self.records {
            let [a, b, c, d] = r.gamma.entries();
            w.write_record([
                r.norm.to_string(),
                a.to_string(),
                b.to_string(),
                c.to_string(),
                d.to_string(),
                format!("{:e}", r.residual_approx),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("csv output failed: {e}")))
    }

    /// `T,norm,D` with empty cells where no matrix fits the budget.
    pub fn write_staircase_csv<W: Write>(&self, out: W) -> Result<(), Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["T", "norm", "D"]).map_err(csv_err)?;
        for g in &self.grid {
            let (n, d) = match g.record.map(|i| &self.records[i]) {
                Some(r) => (r.norm.to_string(), format!("{:e}", r.residual_approx)),
                None => (String::new(), String::new()),
            };
            w.write_record([g.t.to_string(), n, d]).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("csv output failed: {e}")))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv output failed: {e}"))
}

/// `1, 2, 4, …` below `t_max`, then `t_max`.
pub fn geometric_grid(t_max: u64) -> Vec<u64> {
    let mut g: Vec<u64> = std::iter::successors(Some(1u64), |t| t.checked_mul(2))
        .take_while(|&t| t < t_max)
        .collect();
    g.push(t_max.max(1));
    g.dedup();
    g
}

/// Records and the sampled staircase `D(T) = min_{|γ| ≤ T} |γx − y|`.
pub fn staircase(
    x: &PlanePoint,
    y: &PlanePoint,
    grid: &[u64],
    source: StaircaseSource,
    cap: u64,
) -> Result<RecordSequence, Error> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("the T grid must be positive and strictly increasing".into()));
    }
    let t_max = *grid.last().expect("nonempty");
    let kind = target_kind(y)?;
    let (records, examined) = match source {
        StaircaseSource::Oracle => {
            if t_max > cap {
                return Err(Error::CapExceeded { requested: t_max, cap });
            }
            if t_max > FIXED_POINT_LIMIT {
                return Err(Error::InvalidInput(format!("the oracle handles T ≤ {FIXED_POINT_LIMIT}")));
            }
            oracle_records(x, y, grid)?
        }
        StaircaseSource::Constructions => (construction_records(x, y, t_max)?, 0),
    };
    let grid = grid
        .iter()
        .map(|&t| GridPoint {
            t,
            record: records.partition_point(|r| r.norm <= t).checked_sub(1),
        })
        .collect();
    Ok(RecordSequence { records, grid, source, kind, examined })
}

fn oracle_records(x: &PlanePoint, y: &PlanePoint, grid: &[u64]) -> Result<(Vec<Record>, u64), Error> {
    let oracle = Oracle::new(x, y)?;
    let mut bands = vec![1u64];
    bands.extend(grid.iter().copied().filter(|&t| t > 1));
    let mut best: Vec<Cand> = Vec::new();
    let mut examined = 0;
    let mut t_prev = 0;
    for t in bands {
        let theta = best.last().map(|c| c.r);
        let (cands, seen) = oracle.band(t_prev, t, theta);
        examined += seen;
        for c in cands {
            let better = match best.last() {
                None => true,
                Some(b) => oracle.less(&c, b)?,
            };
            if better {
                // keep one record per norm: the best one
                if best.last().is_some_and(|b| b.norm == c.norm) {
                    best.pop();
                }
                best.push(c);
            }
        }
        t_prev = t;
    }
    let records = best
        .iter()
        .map(|c| {
            let residual = oracle.residual_exact(&c.e)?.value;
            Ok(Record {
                gamma: matrix_of(&c.e),
                norm: c.norm,
                residual_approx: residual.to_f64(),
                residual,
            })
        })
        .collect::<Result<_, Error>>()?;
    Ok((records, examined))
}

/// Upper envelope of the constructions with norm up to `t_max`.
fn construction_records(x: &PlanePoint, y: &PlanePoint, t_max: u64) -> Result<Vec<Record>, Error> {
    const MAX_STEPS: usize = 400;
    let pair = normalize(x, y)?;
    let limit = BigInt::from(t_max);
    let mut found: Vec<UnimodularMatrix> = Vec::new();
    for step in 1..=MAX_STEPS {
        let result = match pair.target() {
            None => approx_origin(&pair, step),
            Some(TargetSlope::Rational { .. }) => match approx_rational_slope(&pair, step) {
                Err(Error::KTooSmall { .. }) => continue,
                r => r,
            },
            Some(TargetSlope::Irrational { .. }) => match select_indices_small_omega(&pair, step) {
                Ok((j, k)) => approx_irrational_slope(&pair, j, k),
                Err(Error::InvalidInput(_)) => continue,
                Err(e) => return Err(e),
            },
        }?;
        if result.norm > limit {
            break;
        }
        if !found.contains(&result.gamma) {
            found.push(result.gamma);
        }
    }
    let y_origin = y.is_origin()?;
    let mut scored = found
        .into_iter()
        .map(|g| {
            let residual = Residual::of(x, y, &g, y_origin, None)?;
            let norm = g.norm().to_u64().expect("bounded by t_max");
            Ok((g, norm, residual))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    scored.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.to_string().cmp(&b.0.to_string())));
    let mut best: Vec<(UnimodularMatrix, u64, Residual)> = Vec::new();
    for item in scored {
        let better = match best.last() {
            None => true,
            Some(b) => item.2.cmp(&b.2)? == Ordering::Less,
        };
        if better {
            if best.last().is_some_and(|b| b.1 == item.1) {
                best.pop();
            }
            best.push(item);
        }
    }
    Ok(best
        .into_iter()
        .map(|(gamma, norm, r)| Record { gamma, norm, residual_approx: r.value.to_f64(), residual: r.value })
        .collect())
}

/// Norm range `[t_min, t_max]` over which exponents are read off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub t_min: u64,
    pub t_max: u64,
}

impl Window {
    pub fn new(t_min: u64, t_max: u64) -> Result<Self, Error> {
        if t_min < 2 || t_min > t_max {
            return Err(Error::InvalidInput(format!("window [{t_min}, {t_max}] needs 2 ≤ t_min ≤ t_max")));
        }
        Ok(Window { t_min, t_max })
    }

    /// `[⌈√t_max⌉, t_max]`.
    pub fn tail(t_max: u64) -> Self {
        let r = num_integer::Roots::sqrt(&t_max);
        let t_min = if r * r == t_max { r } else { r + 1 };
        Window { t_min: t_min.max(2), t_max: t_max.max(2) }
    }

    fn contains(&self, t: u64) -> bool {
        self.t_min <= t && t <= self.t_max
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.t_min, self.t_max)
    }
}

/// Exponents predicted from asserted values of `ω`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoryExponents {
    pub mu: BigRational,
    /// `None` when a needed `ω` was not supplied.
    pub mu_hat: Option<BigRational>,
    /// The values are lower bounds rather than equalities.
    pub lower_bounds: bool,
}

impl TheoryExponents {
    pub fn to_json(&self) -> Value {
        json!({
            "mu": self.mu.to_string(),
            "mu_hat": self.mu_hat.as_ref().map(|m| m.to_string()),
            "lower_bounds": self.lower_bounds,
        })
    }
}

fn reciprocal(omega: &Omega) -> BigRational {
    match omega {
        Omega::Finite(w) => w.recip(),
        Omega::Infinite => BigRational::zero(),
    }
}

/// `(ω/(ω+1), 1/(ω+1))`, which is `(1, 0)` for `ω = ∞`.
pub fn upper_bound_exponents_rational(omega: &Omega) -> (BigRational, BigRational) {
    match omega {
        Omega::Finite(w) => {
            let d = w + BigRational::one();
            (w / &d, d.recip())
        }
        Omega::Infinite => (BigRational::one(), BigRational::zero()),
    }
}

/// Predicted `(μ, μ̂)` for each kind of target.
pub fn theory_exponents(kind: TargetKind, omega_xi: Option<&Omega>, omega_y: Option<&Omega>) -> Option<TheoryExponents> {
    match kind {
        TargetKind::Origin => Some(TheoryExponents {
            mu: BigRational::one(),
            mu_hat: omega_xi.map(reciprocal),
            lower_bounds: false,
        }),
        TargetKind::Rational => {
            let (mu, mu_hat) = upper_bound_exponents_rational(omega_xi?);
            Some(TheoryExponents { mu, mu_hat: Some(mu_hat), lower_bounds: false })
        }
        TargetKind::Irrational => {
            let third = BigRational::new(1.into(), 3.into());
            let mu_hat = omega_xi.zip(omega_y).map(|(wx, wy)| {
                let inv_x = reciprocal(wx);
                match wy {
                    // (ω+1)/(2(2ω+1)) tends to 1/4
                    Omega::Infinite => inv_x / BigRational::from_integer(4.into()),
                    Omega::Finite(w) => {
                        let one = BigRational::one();
                        let two = BigRational::from_integer(2.into());
                        (w + &one) / (&two * (&two * w + &one)) * inv_x
                    }
                }
            });
            Some(TheoryExponents { mu: third, mu_hat, lower_bounds: true })
        }
    }
}

/// Empirical `μ` and `μ̂` with the window they were read from.
#[derive(Clone, Debug)]
pub struct ExponentEstimate {
    pub window: Window,
    pub source: StaircaseSource,
    pub kind: TargetKind,
    /// `max −log r / log |γ|` over records with norm in the window.
    pub mu: f64,
    /// Norm of the record attaining `mu`.
    pub mu_norm: u64,
    /// `min −log D(T) / log T` over grid values in the window.
    pub mu_hat: f64,
    /// Grid value attaining `mu_hat`.
    pub mu_hat_t: u64,
    pub records_used: usize,
    pub grid_used: Vec<u64>,
    pub theory: Option<TheoryExponents>,
}

impl ExponentEstimate {
    pub fn to_json(&self) -> Value {
        json!({
            "window": [self.window.t_min, self.window.t_max],
            "source": self.source.to_string(),
            "kind": self.kind.to_string(),
            "mu": self.mu,
            "mu_attained_at_norm": self.mu_norm,
            "mu_hat": self.mu_hat,
            "mu_hat_attained_at_T": self.mu_hat_t,
            "records_in_window": self.records_used,
            "grid_in_window": self.grid_used,
            "theory": self.theory.as_ref().map(TheoryExponents::to_json),
        })
    }
}

impl fmt::Display for ExponentEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} staircase, {} target, window {}", self.source, self.kind, self.window)?;
        writeln!(f, "  μ  ≈ {:.4} (record at |γ| = {}, {} records)", self.mu, self.mu_norm, self.records_used)?;
        writeln!(f, "  μ̂  ≈ {:.4} (at T = {}, {} grid values)", self.mu_hat, self.mu_hat_t, self.grid_used.len())?;
        match &self.theory {
            Some(t) => {
                let rel = if t.lower_bounds { "≥" } else { "=" };
                let hat = t.mu_hat.as_ref().map_or("?".to_string(), |m| m.to_string());
                write!(f, "  theory: μ {rel} {}, μ̂ {rel} {hat}", t.mu)
            }
            None => write!(f, "  theory: needs an asserted ω(ξ)"),
        }
    }
}

/// Reads `μ` and `μ̂` off a record sequence.
pub fn estimate_exponents(
    rs: &RecordSequence,
    window: &Window,
    omega_xi: Option<&Omega>,
    omega_y: Option<&Omega>,
) -> Result<ExponentEstimate, Error> {
    let ratio = |r: f64, n: u64| if r > 0.0 { -r.ln() / (n as f64).ln() } else { f64::INFINITY };
    let in_window: Vec<&Record> = rs.records.iter().filter(|r| window.contains(r.norm)).collect();
    if in_window.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} records with norm in {window}, need 3",
            in_window.len()
        )));
    }
    let (mu, mu_norm) = in_window
        .iter()
        .map(|r| (ratio(r.residual_approx, r.norm), r.norm))
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    let grid: Vec<(u64, f64)> = rs
        .grid
        .iter()
        .filter(|g| window.contains(g.t))
        .filter_map(|g| g.record.map(|i| (g.t, ratio(rs.records[i].residual_approx, g.t))))
        .collect();
    if grid.is_empty() {
        return Err(Error::InsufficientData(format!("no grid value of T in {window}")));
    }
    let (mu_hat_t, mu_hat) = grid
        .iter()
        .copied()
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    Ok(ExponentEstimate {
        window: *window,
        source: rs.source,
        kind: rs.kind,
        mu,
        mu_norm,
        mu_hat,
        mu_hat_t,
        records_used: in_window.len(),
        grid_used: grid.iter().map(|g| g.0).collect(),
        theory: theory_exponents(rs.kind, omega_xi, omega_y),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateKind {
    Lemma1,
    Theorem4,
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertificateKind::Lemma1 => "lemma1",
            CertificateKind::Theorem4 => "thm4",
        })
    }
}

/// Outcome of an exhaustive check `|γx − y| ≥ bound` for all `|γ| ≤ t`.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub inputs: Value,
    pub cap: u64,
    pub t: u64,
    /// Matrices enumerated.
    pub count: u64,
    pub bound: BigRational,
    pub minimizer: UnimodularMatrix,
    pub min_distance: RealValue,
    pub passed: bool,
}

impl Certificate {
    pub fn to_json(&self) -> Value {
        json!({
            "kind": self.kind.to_string(),
            "inputs": self.inputs,
            "cap": self.cap,
            "T": self.t,
            "count": self.count,
            "bound": self.bound.to_string(),
            "minimizer": json_matrix(&self.minimizer),
            "min_distance": self.min_distance.to_string(),
            "min_distance_approx": self.min_distance.to_f64(),
            "passed": self.passed,
        })
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.kind, if self.passed { "PASS" } else { "FAIL" })?;
        writeln!(f, "  T = {}, {} matrices examined", self.t, self.count)?;
        writeln!(f, "  minimizer {} at distance {} ≈ {:.6e}", self.minimizer, self.min_distance, self.min_distance.to_f64())?;
        write!(f, "  bound {} ≈ {:.6e}", self.bound, self.bound.to_f64().unwrap_or(f64::NAN))
    }
}

/// Count of `|γ| ≤ t` and the exact minimizer of the residual, earliest in
/// enumeration order among ties.
fn exhaustive_min(oracle: &Oracle, t: u64) -> Result<(u64, Entries, RealValue), Error> {
    let ti = t as i64;
    let row = |v2: i64| {
        (-ti..=ti)
            .filter(move |&u2| num_integer::Integer::gcd(&v2, &u2) == 1)
            .flat_map(move |u2| family(v2, u2, ti))
    };
    let (count, min_hi) = (-ti..=ti)
        .into_par_iter()
        .map(|v2| row(v2).fold((0u64, i128::MAX), |(n, m), e| (n + 1, m.min(oracle.residual_fx(&e).hi))))
        .reduce(|| (0, i128::MAX), |a, b| (a.0 + b.0, a.1.min(b.1)));
    let near: Vec<Cand> = (-ti..=ti)
        .into_par_iter()
        .flat_map_iter(|v2| row(v2).map(|e| oracle.cand(e)).filter(|c| c.r.lo <= min_hi).collect::<Vec<_>>())
        .collect();
    let mut best = *near.first().ok_or_else(|| Error::InvalidInput("empty enumeration".into()))?;
    for c in &near[1..] {
        if oracle.less(c, &best)? {
            best = *c;
        }
    }
    Ok((count, best.e, oracle.residual_exact(&best.e)?.value))
}

fn certify(
    kind: CertificateKind,
    inputs: Value,
    x: &PlanePoint,
    y: &PlanePoint,
    t: u64,
    cap: u64,
    bound: BigRational,
) -> Result<Certificate, Error> {
    if t > cap {
        return Err(Error::CapExceeded { requested: t, cap });
    }
    if t > FIXED_POINT_LIMIT {
        return Err(Error::InvalidInput(format!("the oracle handles T ≤ {FIXED_POINT_LIMIT}")));
    }
    if t == 0 {
        return Err(Error::InvalidInput("the norm budget is zero".into()));
    }
    let oracle = Oracle::new(x, y)?;
    let (count, e, min_distance) = exhaustive_min(&oracle, t)?;
    let passed = min_distance.compare(&bound)? != Ordering::Less;
    Ok(Certificate {
        kind,
        inputs,
        cap,
        t,
        count,
        bound,
        minimizer: matrix_of(&e),
        min_distance,
        passed,
    })
}

/// Checks `|γ(ξ, 1)| ≥ 1/(2q_k)` for every `|γ| ≤ q_{k+1}/2`.
pub fn verify_lemma1(xi: &ContinuedFraction, k: usize, cap: u64) -> Result<Certificate, Error> {
    let q_k = xi.q(k)?;
    let t = (xi.q(k + 1)? / 2u32)
        .to_u64()
        .ok_or(Error::CapExceeded { requested: u64::MAX, cap })?;
    let x = PlanePoint::from_slope(xi.x().clone());
    let inputs = json!({ "xi": xi.x().to_string(), "k": k, "q_k": q_k.to_string() });
    let bound = BigRational::new(BigInt::one(), 2 * q_k);
    certify(CertificateKind::Lemma1, inputs, &x, &PlanePoint::origin(), t, cap, bound)
}

/// Checks `|γ(ξ, 1) − y| ≥ 1/(4bq_k)` for every `|γ| ≤ |y₂|q_kq_{k+1}/4`,
/// where `y` has slope `a/b` with `|a| ≤ b`.
pub fn verify_theorem4(xi: &ContinuedFraction, y: &PlanePoint, k: usize, cap: u64) -> Result<Certificate, Error> {
    let pre = |m: String| Error::PreconditionFailed(m);
    if y.x2.signum()?.is_eq() {
        return Err(pre("y₂ must be nonzero".into()));
    }
    let (a, b) = match TargetSlope::of_point(y) {
        Ok(TargetSlope::Rational { a, b, .. }) => (a, b),
        _ => return Err(pre("y must have a rational slope a/b".into())),
    };
    if a.abs() > b {
        return Err(pre(format!("|a| ≤ b fails for slope {a}/{b}")));
    }
    let q_k = xi.q(k)?;
    let q_next = xi.q(k + 1)?;
    let y2 = y.x2.abs();
    let twelve_b = BigRational::from_integer(12 * &b);
    if y2.mul_int(&q_k).compare(&twelve_b)? == Ordering::Less {
        return Err(pre(format!("q_k |y₂| ≥ 12b fails: q_{k} = {q_k}, |y₂| = {y2}, b = {b}")));
    }
    let budget = y2.mul_rational(&BigRational::new(&q_k * &q_next, 4.into())).floor()?;
    let t = budget.to_u64().ok_or(Error::CapExceeded { requested: u64::MAX, cap })?;
    let x = PlanePoint::from_slope(xi.x().clone());
    let inputs = json!({
        "xi": xi.x().to_string(),
        "y": [y.x1.to_string(), y.x2.to_string()],
        "slope": format!("{a}/{b}"),
        "k": k,
        "q_k": q_k.to_string(),
        "q_k+1": q_next.to_string(),
    });
    let bound = BigRational::new(BigInt::one(), 4 * &b * &q_k);
    certify(CertificateKind::Theorem4, inputs, &x, y, t, cap, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::count_norm_bounded;

    fn golden() -> ContinuedFraction {
        ContinuedFraction::new("surd:(-1+1*sqrt(5))/2".parse().unwrap()).unwrap()
    }

    fn golden_x() -> PlanePoint {
        PlanePoint::from_slope(golden().x().clone())
    }

    fn point(s: &str) -> PlanePoint {
        s.parse().unwrap()
    }

    /// Smallest residual over all `|γ| ≤ t`, by plain enumeration and exact comparison.
    fn brute_min(x: &PlanePoint, y: &PlanePoint, t: u64) -> Residual {
        let origin = y.is_origin().unwrap();
        crate::sl2::enumerate_norm_bounded(t)
            .map(|g| Residual::of(x, y, &g, origin, None).unwrap())
            .reduce(|a, b| if b.cmp(&a).unwrap() == Ordering::Less { b } else { a })
            .unwrap()
    }

    #[test]
    fn staircase_matches_brute_force() {
        let x = golden_x();
        for y in [point("0,0"), point("1,2"), point("surd:(-1+1*sqrt(2))/1,1"), point("rat:-3/2,rat:1/3")] {
            let grid = [1, 2, 3, 5, 8, 13, 20];
            let rs = staircase(&x, &y, &grid, StaircaseSource::Oracle, DEFAULT_ORACLE_CAP).unwrap();
            for g in &rs.grid {
                let r = &rs.records[g.record.unwrap()];
                let d = Residual::of(&x, &y, &r.gamma, y.is_origin().unwrap(), None).unwrap();
                let b = brute_min(&x, &y, g.t);
                assert_eq!(d.cmp(&b).unwrap(), Ordering::Equal, "y = {y}, T = {}", g.t);
            }
        }
    }

    #[test]
    fn grid_choice_does_not_change_values() {
        let x = golden_x();
        let y = point("1,2");
        let coarse = staircase(&x, &y, &[40], StaircaseSource::Oracle, 100).unwrap();
        let fine = staircase(&x, &y, &geometric_grid(40), StaircaseSource::Oracle, 100).unwrap();
        let a = &coarse.d(40).unwrap().gamma;
        let b = &fine.d(40).unwrap().gamma;
        assert_eq!(a, b);
        let norms = |rs: &RecordSequence| rs.records.iter().map(|r| r.norm).collect::<Vec<_>>();
        assert_eq!(norms(&coarse), norms(&fine));
    }

    #[test]
    fn records_strictly_improve_and_staircase_descends() {
        let rs = staircase(&golden_x(), &point("1,2"), &geometric_grid(2000), StaircaseSource::Oracle, 2000).unwrap();
        for w in rs.records.windows(2) {
            assert!(w[0].norm < w[1].norm);
            assert_eq!(w[1].residual.cmp_value(&w[0].residual).unwrap(), Ordering::Less);
        }
        let d: Vec<f64> = rs.grid.iter().map(|g| rs.records[g.record.unwrap()].residual_approx).collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn origin_records_sit_at_convergent_matrices() {
        let cf = golden();
        let x = golden_x();
        let rs = staircase(&x, &PlanePoint::origin(), &geometric_grid(200), StaircaseSource::Oracle, 200).unwrap();
        for k in 2..=7 {
            let t = cf.q(k + 1).unwrap().to_u64().unwrap() / 2;
            let bound = BigRational::new(1.into(), 2 * cf.q(k).unwrap());
            let best = brute_min(&x, &PlanePoint::origin(), t).value;
            assert_ne!(best.compare(&bound).unwrap(), Ordering::Less, "k = {k}");
        }
        // beyond the first few, record residuals are |ε_{k−1}| for some k
        let eps: Vec<f64> = (1..20).map(|k| cf.abs_epsilon(k).unwrap().to_f64()).collect();
        for r in rs.records.iter().filter(|r| r.norm >= 3) {
            assert!(eps.iter().any(|e| (e - r.residual_approx).abs() < 1e-12), "{}", r.gamma);
        }
    }

    #[test]
    fn constructions_never_beat_the_oracle() {
        let x = golden_x();
        for y in [point("0,0"), point("1,2")] {
            let grid = geometric_grid(1000);
            let oracle = staircase(&x, &y, &grid, StaircaseSource::Oracle, 1000).unwrap();
            let cons = staircase(&x, &y, &grid, StaircaseSource::Constructions, 1000).unwrap();
            assert!(!cons.records.is_empty());
            for (o, c) in oracle.grid.iter().zip(&cons.grid) {
                if let Some(ci) = c.record {
                    let oi = o.record.unwrap();
                    let ord = cons.records[ci].residual.cmp_value(&oracle.records[oi].residual).unwrap();
                    assert_ne!(ord, Ordering::Less, "T = {}", o.t);
                }
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let r = staircase(&golden_x(), &point("1,2"), &[10, 20_000], StaircaseSource::Oracle, DEFAULT_ORACLE_CAP);
        assert!(matches!(r, Err(Error::CapExceeded { requested: 20_000, cap: 10_000 })));
        assert!(matches!(verify_lemma1(&golden(), 12, 100), Err(Error::CapExceeded { .. })));
        assert!(staircase(&golden_x(), &point("1,2"), &[4, 2], StaircaseSource::Oracle, 10).is_err());
    }

    #[test]
    fn lemma1_certificates() {
        let cf = golden();
        for (k, t) in [(4, 4), (6, 10)] {
            let c = verify_lemma1(&cf, k, DEFAULT_ORACLE_CAP).unwrap();
            assert!(c.passed);
            assert_eq!(c.t, t);
            assert_eq!(c.count, count_norm_bounded(t));
            let json = c.to_json();
            assert_eq!(json["passed"], true);
        }
    }

    #[test]
    fn theorem4_certificate_and_precondition() {
        let cf = golden();
        let y = point("1,2");
        let c = verify_theorem4(&cf, &y, 6, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(c.t, 136);
        assert_eq!(c.bound, BigRational::new(1.into(), 104.into()));
        assert!(c.passed);
        assert_eq!(c.count, count_norm_bounded(136));
        let direct = c.minimizer.apply(&golden_x()).sub(&y).sup_norm().unwrap();
        assert_eq!(direct.cmp_value(&c.min_distance).unwrap(), Ordering::Equal);
        assert!(matches!(verify_theorem4(&cf, &y, 4, DEFAULT_ORACLE_CAP), Err(Error::PreconditionFailed(_))));
        assert!(matches!(
            verify_theorem4(&cf, &point("3,2"), 8, DEFAULT_ORACLE_CAP),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn theory_values() {
        let one = Omega::one();
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let t = theory_exponents(TargetKind::Rational, Some(&one), None).unwrap();
        assert_eq!((t.mu, t.mu_hat), (r(1, 2), Some(r(1, 2))));
        assert_eq!(upper_bound_exponents_rational(&Omega::integer(2)), (r(2, 3), r(1, 3)));
        assert_eq!(upper_bound_exponents_rational(&Omega::Infinite), (r(1, 1), r(0, 1)));
        let t = theory_exponents(TargetKind::Irrational, Some(&one), Some(&one)).unwrap();
        assert_eq!((t.mu, t.mu_hat), (r(1, 3), Some(r(1, 3))));
        assert!(t.lower_bounds);
        let t = theory_exponents(TargetKind::Irrational, Some(&Omega::integer(2)), Some(&Omega::Infinite)).unwrap();
        assert_eq!(t.mu_hat, Some(r(1, 8)));
        let t = theory_exponents(TargetKind::Origin, Some(&one), None).unwrap();
        assert_eq!((t.mu, t.mu_hat), (r(1, 1), Some(r(1, 1))));
        assert!(theory_exponents(TargetKind::Rational, None, None).is_none());
    }

    #[test]
    fn estimates_need_enough_records() {
        let rs = staircase(&golden_x(), &point("1,2"), &[1, 2, 4], StaircaseSource::Oracle, 10).unwrap();
        let w = Window::new(3, 4).unwrap();
        assert!(matches!(estimate_exponents(&rs, &w, None, None), Err(Error::InsufficientData(_))));
        assert_eq!(Window::tail(10_000), Window { t_min: 100, t_max: 10_000 });
        assert_eq!(Window::tail(1000).t_min, 32);
    }

    #[test]
    fn origin_exponents_near_one() {
        let rs = staircase(&golden_x(), &PlanePoint::origin(), &geometric_grid(4096), StaircaseSource::Oracle, 4096)
            .unwrap();
        let est = estimate_exponents(&rs, &Window::tail(4096), Some(&Omega::one()), None).unwrap();
        assert!(est.mu_hat <= est.mu);
        assert!((est.mu - 1.0).abs() < 0.15, "{est}");
        assert!((est.mu_hat - 1.0).abs() < 0.15, "{est}");
    }

    #[test]
    fn fixed_point_encloses() {
        let v: RealValue = "surd:(-1+1*sqrt(5))/2".parse().unwrap();
        let f = Fx::of(&v).unwrap();
        assert!(f.hi - f.lo <= 4);
        let m = f.mul(-7).add(Fx::of(&RealValue::from_integer(3)).unwrap());
        let exact = (&v.mul_int(&(-7).into()) + &RealValue::from_integer(3)).to_f64();
        assert!((m.mid() - exact).abs() < 1e-15);
        assert!(m.lo <= m.hi);
        assert_eq!(Fx { lo: -3, hi: 2 }.abs(), Fx { lo: 0, hi: 3 });
    }

    #[test]
    fn csv_and_json_outputs() {
        let rs = staircase(&golden_x(), &point("1,2"), &[1, 2, 4, 8], StaircaseSource::Oracle, 10).unwrap();
        let mut buf = Vec::new();
        rs.write_staircase_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("T,norm,D\n1,"));
        assert_eq!(text.lines().count(), 5);
        let mut buf = Vec::new();
        rs.write_records_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), rs.records.len() + 1);
        assert_eq!(rs.to_json()["staircase"].as_array().unwrap().len(), 4);
    }
}
