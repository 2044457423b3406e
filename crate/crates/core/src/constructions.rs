//! Explicit approximants `γ = N · U^ℓ · M_k` for the orbit of `x` near `y`.
//!
//! `M_k` comes from the continued fraction of the slope `ξ` of `x` and sends
//! `x` to `x₂ (ε_k, |ε_{k−1}|)`. `N` is built from the slope of `y`: a fixed
//! completion of `(a, b)ᵀ` for a rational slope, a convergent matrix of the
//! slope otherwise. The shift `ℓ` is a rounding of the real number `ρ` that
//! makes the second coordinate of `γx − y` vanish.
//!
//! Every inequality the construction is supposed to satisfy is checked with
//! exact arithmetic before a result is returned.

use std::cmp::Ordering;
use std::fmt;
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::contfrac::ContinuedFraction;
use crate::real::{QuadSurd, RealValue};
use crate::sl2::{PlanePoint, UnimodularMatrix};
use crate::Error;

fn int(n: &BigInt) -> RealValue {
    RealValue::from_integer(n.clone())
}

fn rat(n: impl Into<BigInt>, d: impl Into<BigInt>) -> RealValue {
    RealValue::from_rational(BigRational::new(n.into(), d.into()))
}

fn le(a: &RealValue, b: &RealValue) -> Result<bool, Error> {
    Ok(a.cmp_value(b)? != Ordering::Greater)
}

fn lt(a: &RealValue, b: &RealValue) -> Result<bool, Error> {
    Ok(a.cmp_value(b)? == Ordering::Less)
}

fn div(a: &RealValue, b: &RealValue) -> Result<RealValue, Error> {
    Ok(a * &b.recip()?)
}

fn ipow(b: &BigInt, e: u32) -> BigInt {
    Pow::pow(b, e)
}

fn small_exponent(r: &BigRational, what: &str) -> Result<(u32, u32), Error> {
    let bad = || Error::InvalidInput(format!("{what} = {r} needs a small numerator and denominator"));
    let n = r.numer().to_u32().ok_or_else(bad)?;
    let d = r.denom().to_u32().ok_or_else(bad)?;
    Ok((n, d))
}

pub(crate) fn json_int(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

pub(crate) fn json_matrix(m: &UnimodularMatrix) -> Value {
    json!([[json_int(m.v1()), json_int(m.u1())], [json_int(m.v2()), json_int(m.u2())]])
}

/// `x` and `y` after rotations by `J` so that `|x| = |x₂|` and `|y| = |y₂|`.
#[derive(Debug)]
pub struct NormalizedPair {
    pub x: PlanePoint,
    pub y: PlanePoint,
    /// `pre · x`.
    pub x_n: PlanePoint,
    /// `post · y`.
    pub y_n: PlanePoint,
    pub pre: UnimodularMatrix,
    pub post: UnimodularMatrix,
    xi: ContinuedFraction,
    target: Option<TargetSlope>,
}

impl NormalizedPair {
    /// Continued fraction of `ξ = x₁/x₂` after normalization, with `0 < |ξ| < 1`.
    pub fn xi(&self) -> &ContinuedFraction {
        &self.xi
    }

    /// Slope data of `y`, or `None` for the origin.
    pub fn target(&self) -> Option<&TargetSlope> {
        self.target.as_ref()
    }

    fn require_target(&self) -> Result<&TargetSlope, Error> {
        self.target
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("this construction needs y ≠ 0".into()))
    }

    /// `γ = post⁻¹ γ′ pre`, so that `γx − y = post⁻¹ (γ′x′ − y′)`.
    pub fn map_back(&self, gamma_n: &UnimodularMatrix) -> UnimodularMatrix {
        &(&self.post.inverse() * gamma_n) * &self.pre
    }

    /// `|y₂| / |x₂|` in normalized coordinates.
    fn ratio(&self) -> Result<RealValue, Error> {
        div(&self.y_n.x2.abs(), &self.x_n.x2.abs())
    }
}

/// Rotates `x` and `y` by `J` where needed and expands the slopes.
pub fn normalize(x: &PlanePoint, y: &PlanePoint) -> Result<NormalizedPair, Error> {
    let turn = |p: &PlanePoint| -> Result<UnimodularMatrix, Error> {
        Ok(if p.x1.abs().cmp_value(&p.x2.abs())? == Ordering::Greater {
            UnimodularMatrix::j()
        } else {
            UnimodularMatrix::identity()
        })
    };
    let pre = turn(x)?;
    let post = turn(y)?;
    let x_n = pre.apply(x);
    let y_n = post.apply(y);
    if x_n.x2.signum()?.is_eq() {
        return Err(Error::SlopeRational);
    }
    let xi = ContinuedFraction::new(x_n.slope()?).map_err(|e| match e {
        Error::RationalInput(_) => Error::SlopeRational,
        other => other,
    })?;
    let target = if y_n.is_origin()? {
        None
    } else {
        Some(TargetSlope::of_point(&y_n)?)
    };
    Ok(NormalizedPair {
        x: x.clone(),
        y: y.clone(),
        x_n,
        y_n,
        pre,
        post,
        xi,
        target,
    })
}

/// Slope of the target point, with the matrices `N` built from it.
#[derive(Debug)]
pub enum TargetSlope {
    /// `a/b` in lowest terms with `b > 0`, and `N = [[a, a′], [b, b′]]`.
    Rational { a: BigInt, b: BigInt, n: UnimodularMatrix },
    /// Convergents `t_j/s_j` of an irrational slope.
    Irrational { cf: ContinuedFraction },
}

/// `[[a, a′], [b, b′]]` of determinant one, minimizing `|b′|`, then `|a′|`,
/// then preferring `b′ ≥ 0`.
pub fn complete_primitive(a: &BigInt, b: &BigInt) -> Result<UnimodularMatrix, Error> {
    if !b.is_positive() {
        return Err(Error::InvalidInput(format!("denominator {b} must be positive")));
    }
    let e = a.extended_gcd(b);
    if !e.gcd.is_one() {
        return Err(Error::InvalidInput(format!("({a}, {b}) is not primitive")));
    }
    // a·x + b·y = 1, so b′ = x + m·b and a′ = −y + m·a
    let m1 = -Integer::div_floor(&e.x, b);
    [&m1 - 1, m1.clone()]
        .into_iter()
        .map(|m| (&e.x + &m * b, -&e.y + &m * a))
        .min_by_key(|(bp, ap)| (bp.abs(), ap.abs(), bp.is_negative()))
        .map(|(bp, ap)| UnimodularMatrix::from_entries(a.clone(), ap, b.clone(), bp))
        .ok_or(Error::DivisionByZero)
}

impl TargetSlope {
    pub fn rational(a: BigInt, b: BigInt) -> Result<Self, Error> {
        let n = complete_primitive(&a, &b)?;
        Ok(TargetSlope::Rational { a, b, n })
    }

    pub fn irrational(slope: RealValue) -> Result<Self, Error> {
        Ok(TargetSlope::Irrational {
            cf: ContinuedFraction::new(slope)?,
        })
    }

    /// Classifies `y₁/y₂`; `y₂` must be nonzero.
    pub fn of_point(y: &PlanePoint) -> Result<Self, Error> {
        let slope = y.slope()?;
        if let Some(r) = slope.as_rational() {
            return Self::rational(r.numer().clone(), r.denom().clone());
        }
        Self::irrational(slope).map_err(|e| match e {
            Error::RationalInput(_) => Error::InvalidInput("a rational slope must be given exactly".into()),
            other => other,
        })
    }

    /// The slope as a real number.
    pub fn value(&self) -> RealValue {
        match self {
            TargetSlope::Rational { a, b, .. } => rat(a.clone(), b.clone()),
            TargetSlope::Irrational { cf } => cf.x().clone(),
        }
    }

    fn cf(&self) -> Result<&ContinuedFraction, Error> {
        match self {
            TargetSlope::Irrational { cf } => Ok(cf),
            TargetSlope::Rational { .. } => Err(Error::InvalidInput("the slope of y is rational".into())),
        }
    }

    /// `(t_j, s_j)`.
    pub fn convergent(&self, j: usize) -> Result<(BigInt, BigInt), Error> {
        self.cf()?.pq(j as isize)
    }

    /// `s_j`.
    pub fn s(&self, j: usize) -> Result<BigInt, Error> {
        Ok(self.convergent(j)?.1)
    }

    /// `N_j = [[t_j, ±t_{j−1}], [s_j, ±s_{j−1}]]` with sign `(−1)^{j−1}`.
    pub fn n_j(&self, j: usize) -> Result<UnimodularMatrix, Error> {
        if j == 0 {
            return Err(Error::InvalidInput("N_j needs j ≥ 1".into()));
        }
        let (t, s) = self.convergent(j)?;
        let (t0, s0) = self.convergent(j - 1)?;
        let (t0, s0) = if j % 2 == 1 { (t0, s0) } else { (-t0, -s0) };
        Ok(UnimodularMatrix::from_entries(t, t0, s, s0))
    }

    /// The nonnegative variant: columns `(t_{j−1}, s_{j−1})`, `(t_j, s_j)`
    /// in the order that gives determinant one.
    pub fn n_tilde_j(&self, j: usize) -> Result<UnimodularMatrix, Error> {
        if j == 0 {
            return Err(Error::InvalidInput("Ñ_j needs j ≥ 1".into()));
        }
        let (t, s) = self.convergent(j)?;
        let (t0, s0) = self.convergent(j - 1)?;
        Ok(if j.is_multiple_of(2) {
            UnimodularMatrix::from_entries(t0, t, s0, s)
        } else {
            UnimodularMatrix::from_entries(t, t0, s, s0)
        })
    }
}

/// One certified inequality, stated as `lhs ≤ rhs` (or a sign condition).
#[derive(Clone, Debug)]
pub struct Bound {
    pub name: &'static str,
    pub statement: String,
    /// Exact right-hand side in the form actually compared.
    pub rhs: RealValue,
    pub holds: bool,
}

impl Bound {
    fn new(name: &'static str, statement: String, rhs: RealValue, holds: bool) -> Self {
        Bound {
            name,
            statement,
            rhs,
            holds,
        }
    }

    /// `BoundViolated` unless the inequality holds.
    fn required(self) -> Result<Self, Error> {
        if self.holds {
            Ok(self)
        } else {
            Err(Error::BoundViolated(format!("{}: {}", self.name, self.statement)))
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "statement": self.statement,
            "value": self.rhs.to_string(),
            "value_approx": self.rhs.to_f64(),
            "holds": self.holds,
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub n: Option<UnimodularMatrix>,
    pub ell: Option<BigInt>,
    pub k: usize,
    pub j: Option<usize>,
    /// `γ′` acting on the normalized pair.
    pub normalized_gamma: Option<UnimodularMatrix>,
}

#[derive(Clone, Debug)]
pub struct ApproxResult {
    pub gamma: UnimodularMatrix,
    /// `(Λ₁, Λ₂) = γx − y`.
    pub residual: PlanePoint,
    pub norm: BigInt,
    pub trace: Trace,
    pub bounds: Vec<Bound>,
}

impl ApproxResult {
    fn new(gamma: UnimodularMatrix, x: &PlanePoint, y: &PlanePoint, trace: Trace) -> Self {
        let residual = gamma.apply(x).sub(y);
        let norm = gamma.norm();
        ApproxResult {
            gamma,
            residual,
            norm,
            trace,
            bounds: Vec::new(),
        }
    }

    /// `|γx − y|`.
    pub fn residual_norm(&self) -> Result<RealValue, Error> {
        self.residual.sup_norm()
    }

    pub fn bound(&self, name: &str) -> Option<&Bound> {
        self.bounds.iter().find(|b| b.name == name)
    }

    pub fn all_hold(&self) -> bool {
        self.bounds.iter().all(|b| b.holds)
    }

    pub fn to_json(&self) -> Value {
        let t = &self.trace;
        json!({
            "gamma": json_matrix(&self.gamma),
            "norm": json_int(&self.norm),
            "residual": [self.residual.x1.to_string(), self.residual.x2.to_string()],
            "residual_approx": [self.residual.x1.to_f64(), self.residual.x2.to_f64()],
            "bounds": self.bounds.iter().map(Bound::to_json).collect::<Vec<_>>(),
            "trace": {
                "N": t.n.as_ref().map(json_matrix),
                "ell": t.ell.as_ref().map(json_int),
                "k": t.k,
                "j": t.j,
            },
        })
    }
}

impl fmt::Display for ApproxResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} γ={} |γ|={}", self.trace.k, self.gamma, self.norm)?;
        if let Some(j) = self.trace.j {
            write!(f, " j={j}")?;
        }
        if let Some(l) = &self.trace.ell {
            write!(f, " ℓ={l}")?;
        }
        Ok(())
    }
}

/// `ρ = y₂/(x₂ s |ε_{k−1}|) − ε_k/|ε_{k−1}| − s′/s`, so that
/// `Λ₂ = x₂ s |ε_{k−1}| (ℓ − ρ)` for `γ = N U^ℓ M_k`.
fn rho_raw(
    xi: &ContinuedFraction,
    x2: &RealValue,
    y2: &RealValue,
    n: &UnimodularMatrix,
    k: usize,
) -> Result<RealValue, Error> {
    let (s, sp) = (n.v2(), n.u2());
    if s.is_zero() {
        return Err(Error::ZeroRow);
    }
    if k == 0 {
        return Err(Error::InvalidInput("ρ needs k ≥ 1".into()));
    }
    let eps_k = xi.convergent(k)?.epsilon;
    let e1 = xi.abs_epsilon(k as isize - 1)?;
    let scale = &x2.mul_int(s) * &e1;
    Ok(&(&div(y2, &scale)? - &div(&eps_k, &e1)?) - &rat(sp.clone(), s.clone()))
}

/// The real shift `ρ` for `N` and `k` on a normalized pair.
pub fn rho(pair: &NormalizedPair, n: &UnimodularMatrix, k: usize) -> Result<RealValue, Error> {
    rho_raw(&pair.xi, &pair.x_n.x2, &pair.y_n.x2, n, k)
}

/// The integer `ℓ` with `|ℓ − ρ| < 1` and `|ℓ| ≤ |ρ|`.
pub fn choose_ell_truncate(rho: &RealValue) -> Result<BigInt, Error> {
    rho.trunc()
}

/// The smallest integer `ℓ ≥ ρ`.
pub fn choose_ell_ceiling(rho: &RealValue) -> Result<BigInt, Error> {
    rho.ceil()
}

/// Both sides of `y(v₂ξ + u₂) − v₁ξ − u₁ = (sy − t)(ε_k + ℓ|ε_{k−1}|) + (s′y − t′)|ε_{k−1}|`
/// for `γ = N U^ℓ M_k`.
pub fn bilinear_sides(
    xi: &ContinuedFraction,
    y: &RealValue,
    n: &UnimodularMatrix,
    ell: &BigInt,
    k: usize,
) -> Result<(RealValue, RealValue), Error> {
    let m = xi.matrix(k)?;
    let g = &(n * &UnimodularMatrix::u_pow(ell)) * &m.matrix;
    let lin = |v: &BigInt, u: &BigInt| &xi.x().mul_int(v) + &int(u);
    let lhs = &(y * &lin(g.v2(), g.u2())) - &lin(g.v1(), g.u1());
    let eps_k = xi.convergent(k)?.epsilon;
    let e1 = xi.abs_epsilon(k as isize - 1)?;
    let d = &y.mul_int(n.v2()) - &int(n.v1());
    let dp = &y.mul_int(n.u2()) - &int(n.u1());
    let rhs = &(&d * &(&eps_k + &e1.mul_int(ell))) + &(&dp * &e1);
    Ok((lhs, rhs))
}

/// `γ′ = N U^ℓ M_k` on the normalized pair, with the two-sided norm estimate
/// and the bilinear bound certified.
struct Built {
    /// `γ′x′ − y′`.
    lambda: PlanePoint,
    result: ApproxResult,
}

fn build(pair: &NormalizedPair, n: &UnimodularMatrix, ell: &BigInt, k: usize) -> Result<Built, Error> {
    let target = pair.require_target()?;
    let xi = &pair.xi;
    let m = xi.matrix(k)?;
    let gn = &(n * &UnimodularMatrix::u_pow(ell)) * &m.matrix;
    let (q0, q1, q2) = (xi.q(k - 1)?, xi.q(k)?, xi.q(k + 1)?);
    let (s, sp) = (n.v2().abs(), n.u2().abs());
    let nn = n.norm();
    let signed_q1 = if k % 2 == 1 { q1.clone() } else { -&q1 };
    let lower = (ell * &q0 + &signed_q1).abs() * &s - &sp * &q0;
    let upper = ell.abs() * &nn * &q0 + &nn * &q1 * 2u32;
    let norm = gn.norm();
    let sandwich = Bound::new(
        "norm_sandwich",
        format!("{lower} ≤ |γ| = {norm} ≤ {upper}"),
        int(&upper),
        lower <= norm && norm <= upper,
    )
    .required()?;

    let y = target.value();
    let (lhs, _) = bilinear_sides(xi, &y, n, ell, k)?;
    let lhs = lhs.abs();
    let delta = (&y.mul_int(n.v2()) - &int(n.v1())).abs();
    let delta_p = (&y.mul_int(n.u2()) - &int(n.u1())).abs();
    let rhs = &(&(&delta.mul_int(&ell.abs()) * &rat(1, q1.clone())) + &(&delta * &rat(1, q2)))
        + &(&delta_p * &rat(1, q1.clone()));
    let holds = le(&lhs, &rhs)?;
    let bilinear = Bound::new(
        "bilinear_bound",
        format!("|v₁ξ+u₁ − y(v₂ξ+u₂)| ≈ {:.3e} ≤ δ|ℓ|/q_k + δ/q_(k+1) + δ′/q_k ≈ {:.3e}", lhs.to_f64(), rhs.to_f64()),
        rhs,
        holds,
    )
    .required()?;

    let lambda = gn.apply(&pair.x_n).sub(&pair.y_n);
    let trace = Trace {
        n: Some(n.clone()),
        ell: Some(ell.clone()),
        k,
        j: None,
        normalized_gamma: Some(gn.clone()),
    };
    let mut result = ApproxResult::new(pair.map_back(&gn), &pair.x, &pair.y, trace);
    result.bounds = vec![sandwich, bilinear];
    Ok(Built {
        lambda,
        result,
    })
}

/// `γ = N U^ℓ M_k` for the normalized pair, mapped back to `(x, y)`.
pub fn build_gamma(pair: &NormalizedPair, n: &UnimodularMatrix, ell: &BigInt, k: usize) -> Result<ApproxResult, Error> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    Ok(build(pair, n, ell, k)?.result)
}

/// `γ = M_k` as an approximation of the origin, with `|γx| · |γ| ≤ |x|` certified.
pub fn approx_origin(pair: &NormalizedPair, k: usize) -> Result<ApproxResult, Error> {
    if pair.target.is_some() {
        return Err(Error::InvalidInput("approx_origin needs y = 0".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let xi = &pair.xi;
    let m = xi.matrix(k)?;
    let e0 = xi.abs_epsilon(k as isize)?;
    let e1 = xi.abs_epsilon(k as isize - 1)?;
    if !lt(&e0, &e1)? {
        return Err(Error::BoundViolated(format!("|ε_{k}| < |ε_{}|", k - 1)));
    }
    let trace = Trace {
        k,
        normalized_gamma: Some(m.matrix.clone()),
        ..Trace::default()
    };
    let mut result = ApproxResult::new(pair.map_back(&m.matrix), &pair.x, &pair.y, trace);
    // M_k x′ = x₂′ (ε_k, |ε_{k−1}|)
    let dist = &pair.x_n.x2.abs() * &e1;
    let xnorm = pair.x_n.x2.abs();
    let lhs = dist.mul_int(&result.norm);
    let holds = le(&lhs, &xnorm)?;
    result.bounds.push(
        Bound::new(
            "origin_bound",
            format!("|γx|·|γ| ≈ {:.6} ≤ |x| ≈ {:.6}", lhs.to_f64(), xnorm.to_f64()),
            xnorm,
            holds,
        )
        .required()?,
    );
    Ok(result)
}

/// The fixed completion `N` of `(a, b)ᵀ` with `ℓ` from truncation, accepted
/// once `|γ|` lies within `[r q_{k−1}q_k / 2, 3 r q_{k−1}q_k]` for `r = |y₂|/|x₂|`.
pub fn approx_rational_slope(pair: &NormalizedPair, k: usize) -> Result<ApproxResult, Error> {
    let (a, b, n) = match pair.require_target()? {
        TargetSlope::Rational { a, b, n } => (a, b, n),
        TargetSlope::Irrational { .. } => {
            return Err(Error::InvalidInput("approx_rational_slope needs a rational slope".into()))
        }
    };
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let xi = &pair.xi;
    let ell = choose_ell_truncate(&rho(pair, n, k)?)?;
    let Built { lambda, mut result, .. } = build(pair, n, &ell, k)?;
    let (q0, q1) = (xi.q(k - 1)?, xi.q(k)?);
    let prod = &q0 * &q1;
    let r = pair.ratio()?;
    let norm = int(&result.norm);
    let lo = &r.mul_int(&prod) * &rat(1, 2);
    let hi = r.mul_int(&(&prod * 3u32));
    if !le(&lo, &norm)? || !le(&norm, &hi)? {
        return Err(Error::KTooSmall {
            k,
            detail: format!(
                "|γ| = {} outside [{:.3}, {:.3}]",
                result.norm,
                lo.to_f64(),
                hi.to_f64()
            ),
        });
    }
    result.bounds.push(Bound::new(
        "norm_window",
        format!("{:.3} ≤ |γ| = {} ≤ {:.3}", lo.to_f64(), result.norm, hi.to_f64()),
        hi,
        true,
    ));

    let x2 = pair.x_n.x2.abs();
    let y2 = pair.y_n.x2.abs();
    let l2 = lambda.x2.abs();
    let cap2 = &x2.mul_int(b) * &rat(1, q1.clone());
    let holds = le(&l2, &cap2)?;
    result.bounds.push(
        Bound::new("second_coordinate", format!("|Λ₂| ≤ b|x₂|/q_k = {:.6}", cap2.to_f64()), cap2, holds).required()?,
    );

    let res = lambda.sup_norm()?;
    let cap = &x2.mul_int(&(b * 2u32)) * &rat(1, q1);
    let holds = le(&res, &cap)?;
    result.bounds.push(
        Bound::new(
            "residual",
            format!("|γx − y| ≈ {:.6e} ≤ 2b|x₂|/q_k ≈ {:.6e}", res.to_f64(), cap.to_f64()),
            cap,
            holds,
        )
        .required()?,
    );

    // |γx − y| ≤ c|γ|^{−1/2} with c = 2√3 max(|a|, b) |x|^{1/2} |y|^{1/2}, squared
    let mx = a.abs().max(b.clone());
    let c2 = (&x2 * &y2).mul_int(&(&mx * &mx * 12u32));
    let lhs = &res.pow(2) * &norm;
    let holds = le(&lhs, &c2)?;
    result.bounds.push(
        Bound::new(
            "square_root_exponent",
            format!("|γx − y|²·|γ| ≈ {:.6} ≤ c² ≈ {:.6}", lhs.to_f64(), c2.to_f64()),
            c2,
            holds,
        )
        .required()?,
    );
    Ok(result)
}

/// `γ = N_j U^ℓ M_k` for an irrational slope of `y`, with the norm window,
/// the residual bound, the slope errors and the range of `ℓ` certified.
///
/// The bound `|γx − y|³·|γ| ≤ 343·5√5·|x|·|y|²` is evaluated as well but only
/// recorded, since it needs `k` large in terms of `ξ`.
pub fn approx_irrational_slope(pair: &NormalizedPair, j: usize, k: usize) -> Result<ApproxResult, Error> {
    let target = pair.require_target()?;
    if j == 0 || k == 0 {
        return Err(Error::InvalidInput("j and k must be at least 1".into()));
    }
    let n = target.n_j(j)?;
    let xi = &pair.xi;
    let ell = choose_ell_truncate(&rho(pair, &n, k)?)?;
    let Built { lambda, mut result, .. } = build(pair, &n, &ell, k)?;
    result.trace.j = Some(j);
    let (q0, q1) = (xi.q(k - 1)?, xi.q(k)?);
    let (sj, sj1) = (target.s(j)?, target.s(j + 1)?);
    let r = pair.ratio()?;
    let x2 = pair.x_n.x2.abs();
    let y2 = pair.y_n.x2.abs();
    let norm = int(&result.norm);

    let a = r.mul_int(&(&q0 * &q1));
    let lo = &(&a - &int(&(&sj * &q1))).abs() - &int(&(&sj * &q0 * 4u32));
    let hi = &a.mul_int(&2.into()) + &int(&(&sj * &q1 * 4u32));
    let holds = le(&lo, &norm)? && le(&norm, &hi)?;
    result.bounds.push(
        Bound::new(
            "norm_window",
            format!("{:.3} ≤ |γ| = {} ≤ {:.3}", lo.to_f64(), result.norm, hi.to_f64()),
            hi,
            holds,
        )
        .required()?,
    );

    let res = lambda.sup_norm()?;
    let cap = &div(&y2.mul_int(&2.into()), &int(&(&sj * &sj1)))? + &(&x2.mul_int(&(&sj * 5u32)) * &rat(1, q1.clone()));
    let holds = le(&res, &cap)?;
    result.bounds.push(
        Bound::new(
            "residual",
            format!("|γx − y| ≈ {:.6e} ≤ 2|y₂|/(s_j s_(j+1)) + 5|x₂|s_j/q_k ≈ {:.6e}", res.to_f64(), cap.to_f64()),
            cap,
            holds,
        )
        .required()?,
    );

    let y = target.value();
    let delta = (&y.mul_int(n.v2()) - &int(n.v1())).abs();
    let delta_p = (&y.mul_int(n.u2()) - &int(n.u1())).abs();
    let holds = le(&delta, &rat(1, sj1.clone()))? && le(&delta_p, &rat(1, sj.clone()))?;
    result.bounds.push(
        Bound::new(
            "slope_errors",
            format!("δ ≈ {:.3e} ≤ 1/s_(j+1), δ′ ≈ {:.3e} ≤ 1/s_j", delta.to_f64(), delta_p.to_f64()),
            rat(1, sj.clone()),
            holds,
        )
        .required()?,
    );

    let base = div(&r.mul_int(&q1), &int(&sj))?;
    let lo = &base - &int(&3.into());
    let hi = &base.mul_int(&2.into()) + &int(&2.into());
    let l = int(&ell.abs());
    let holds = le(&lo, &l)? && le(&l, &hi)?;
    result.bounds.push(
        Bound::new(
            "shift_range",
            format!("{:.3} ≤ |ℓ| = {} ≤ {:.3}", lo.to_f64(), ell.abs(), hi.to_f64()),
            hi,
            holds,
        )
        .required()?,
    );

    result.bounds.push(cubic_bound(pair, &res, &norm)?);
    Ok(result)
}

/// `|γx − y|³·|γ| ≤ c′³` with `c′ = 7√5 |x|^{1/3} |y|^{2/3}`.
fn cubic_bound(pair: &NormalizedPair, res: &RealValue, norm: &RealValue) -> Result<Bound, Error> {
    let x2 = pair.x_n.x2.abs();
    let y2 = pair.y_n.x2.abs();
    let root5 = RealValue::from_surd(QuadSurd::new(0.into(), 1.into(), 5.into(), 1.into())?);
    let c3 = &(&root5.mul_int(&(343 * 5).into()) * &x2) * &y2.pow(2);
    let lhs = &res.pow(3) * norm;
    let holds = le(&lhs, &c3)?;
    Ok(Bound::new(
        "cube_root_exponent",
        format!("|γx − y|³·|γ| ≈ {:.6} ≤ c′³ ≈ {:.6}", lhs.to_f64(), c3.to_f64()),
        c3,
        holds,
    ))
}

/// `s³ ≤ r·q` and friends, with `r` real.
fn cmp_scaled(r: &RealValue, q: &BigInt, s_pow: &BigInt) -> Result<Ordering, Error> {
    r.mul_int(q).compare(&BigRational::from_integer(s_pow.clone()))
}

/// `(j, k)` with `r q_{k−1} < s_j³ ≤ r q_k < s_{j+1}³`, `r = |y₂|/|x₂|`,
/// where `k` is fixed by `r q_{k−1} < s_{j₀}³ ≤ r q_k` and `j ≥ j₀` is maximal.
pub fn select_indices_small_omega(pair: &NormalizedPair, j0: usize) -> Result<(usize, usize), Error> {
    let target = pair.require_target()?;
    if j0 == 0 {
        return Err(Error::InvalidInput("j₀ must be at least 1".into()));
    }
    let xi = &pair.xi;
    let r = pair.ratio()?;
    let cube = |j: usize| -> Result<BigInt, Error> { Ok(ipow(&target.s(j)?, 3)) };
    let s0 = cube(j0)?;
    let mut k = 1;
    while cmp_scaled(&r, &xi.q(k)?, &s0)? == Ordering::Less {
        k += 1;
    }
    if cmp_scaled(&r, &xi.q(k - 1)?, &s0)? != Ordering::Less {
        return Err(Error::InvalidInput(format!("s_{j0}³ does not exceed |y₂|q_0/|x₂|; take a larger j₀")));
    }
    let q1 = xi.q(k)?;
    let mut j = j0;
    while cmp_scaled(&r, &q1, &cube(j + 1)?)? != Ordering::Less {
        j += 1;
    }
    let ok = cmp_scaled(&r, &xi.q(k - 1)?, &cube(j)?)? == Ordering::Less
        && cmp_scaled(&r, &q1, &cube(j)?)? != Ordering::Less
        && cmp_scaled(&r, &q1, &cube(j + 1)?)? == Ordering::Less;
    if !ok {
        return Err(Error::BoundViolated(format!("cube window for (j, k) = ({j}, {k})")));
    }
    Ok((j, k))
}

/// Indices `k` in `ks` with `q_{k−1}^ω ≤ q_k` (and `q_{k−1} ≥ 2`), each paired
/// with the `j ≥ 1` satisfying `s_j² ≤ r q_k < s_{j+1}²`.
pub fn select_indices_large_omega(
    pair: &NormalizedPair,
    omega: &BigRational,
    ks: RangeInclusive<usize>,
) -> Result<Vec<(usize, usize)>, Error> {
    let target = pair.require_target()?;
    if *omega <= BigRational::from_integer(2.into()) {
        return Err(Error::InvalidInput(format!("ω = {omega} must exceed 2")));
    }
    let (on, od) = small_exponent(omega, "ω")?;
    let xi = &pair.xi;
    let r = pair.ratio()?;
    let sq = |j: usize| -> Result<BigInt, Error> { Ok(ipow(&target.s(j)?, 2)) };
    let label = format!("k ∈ {}..={}", ks.start(), ks.end());
    let mut out = Vec::new();
    for k in ks {
        if k == 0 {
            continue;
        }
        let (q0, q1) = (xi.q(k - 1)?, xi.q(k)?);
        // q_{k−1} = 1 satisfies the growth condition vacuously
        if q0 < BigInt::from(2) || ipow(&q0, on) > ipow(&q1, od) {
            continue;
        }
        if cmp_scaled(&r, &q1, &sq(1)?)? == Ordering::Less {
            continue;
        }
        let mut j = 1;
        while cmp_scaled(&r, &q1, &sq(j + 1)?)? != Ordering::Less {
            j += 1;
        }
        out.push((j, k));
    }
    if out.is_empty() {
        return Err(Error::StreamEmpty(label));
    }
    Ok(out)
}

/// The `j` with `s_j ≤ q_k^τ < s_{j+1}` for `τ ∈ [1/3, 1/2]`, compared as `s^d` against `q^n`.
pub fn select_indices_uniform(pair: &NormalizedPair, k: usize, tau: &BigRational) -> Result<usize, Error> {
    let target = pair.require_target()?;
    let third = BigRational::new(1.into(), 3.into());
    let half = BigRational::new(1.into(), 2.into());
    if *tau < third || *tau > half {
        return Err(Error::InvalidInput(format!("τ = {tau} must lie in [1/3, 1/2]")));
    }
    let (tn, td) = small_exponent(tau, "τ")?;
    let qp = ipow(&pair.xi.q(k)?, tn);
    let mut j = 0;
    while ipow(&target.s(j + 1)?, td) <= qp {
        j += 1;
    }
    if ipow(&target.s(j)?, td) > qp {
        return Err(Error::BoundViolated(format!("s_{j} ≤ q_{k}^τ")));
    }
    Ok(j)
}

/// Outcome of the sign checks of the positive-quadrant construction.
#[derive(Clone, Debug)]
pub struct SignedReport {
    pub k: usize,
    pub j: usize,
    pub rho_positive: bool,
    pub ell: Option<BigInt>,
    pub gamma: Option<UnimodularMatrix>,
    pub v1_positive: bool,
    pub v2_positive: bool,
    pub lambda1_positive: bool,
    pub lambda2_positive: bool,
    /// `max(Λ₁, Λ₂) ≤ |γ|^{−μ}`.
    pub within_bound: bool,
}

impl SignedReport {
    pub fn all_hold(&self) -> bool {
        self.rho_positive
            && self.v1_positive
            && self.v2_positive
            && self.lambda1_positive
            && self.lambda2_positive
            && self.within_bound
    }

    pub fn summary(&self) -> String {
        let mark = |b: bool| if b { "yes" } else { "no" };
        format!(
            "j={} ρ>0 {}, v₁>0 {}, v₂>0 {}, Λ₁>0 {}, Λ₂>0 {}, max Λ ≤ |γ|^−μ {}",
            self.j,
            mark(self.rho_positive),
            mark(self.v1_positive),
            mark(self.v2_positive),
            mark(self.lambda1_positive),
            mark(self.lambda2_positive),
            mark(self.within_bound)
        )
    }
}

/// `γ = Ñ_j U^ℓ M_k` with `ℓ = ⌈ρ⌉`, for `y` in the open positive quadrant,
/// `x₂ > 0`, `k` odd and `s_{j−1}³ < q_k ≤ s_j³`.
///
/// Certifies `v₁, v₂ > 0`, `Λ₁, Λ₂ > 0` and `max(Λ₁, Λ₂) ≤ |γ|^{−μ}`; when any of
/// these fails at this `k` the report comes back in `BoundNotYetReached`.
pub fn approx_signed(x: &PlanePoint, y: &PlanePoint, k: usize, mu: &BigRational) -> Result<ApproxResult, Error> {
    let positive = |v: &RealValue| -> Result<bool, Error> { Ok(v.signum()? == Ordering::Greater) };
    if !positive(&y.x1)? || !positive(&y.x2)? || !positive(&x.x2)? {
        return Err(Error::WrongQuadrant);
    }
    if k.is_multiple_of(2) {
        return Err(Error::EvenK(k));
    }
    if !mu.is_positive() || *mu >= BigRational::new(1.into(), 3.into()) {
        return Err(Error::InvalidInput(format!("μ = {mu} must lie in (0, 1/3)")));
    }
    let (mn, md) = small_exponent(mu, "μ")?;
    let rational = |e: Error| match e {
        Error::RationalInput(_) => Error::SlopeRational,
        other => other,
    };
    let xi = ContinuedFraction::new(x.slope()?).map_err(rational)?;
    let target = TargetSlope::irrational(y.slope()?).map_err(rational)?;
    let q1 = xi.q(k)?;
    let mut j = 1;
    while ipow(&target.s(j)?, 3) < q1 {
        j += 1;
    }
    let mut report = SignedReport {
        k,
        j,
        rho_positive: false,
        ell: None,
        gamma: None,
        v1_positive: false,
        v2_positive: false,
        lambda1_positive: false,
        lambda2_positive: false,
        within_bound: false,
    };
    if ipow(&target.s(j - 1)?, 3) >= q1 {
        return Err(Error::BoundNotYetReached(Box::new(report)));
    }
    let n = target.n_tilde_j(j)?;
    let rho = rho_raw(&xi, &x.x2, &y.x2, &n, k)?;
    report.rho_positive = positive(&rho)?;
    if !report.rho_positive {
        return Err(Error::BoundNotYetReached(Box::new(report)));
    }
    let ell = choose_ell_ceiling(&rho)?;
    let m = xi.matrix(k)?;
    let gamma = &(&n * &UnimodularMatrix::u_pow(&ell)) * &m.matrix;
    let trace = Trace {
        n: Some(n.clone()),
        ell: Some(ell.clone()),
        k,
        j: Some(j),
        normalized_gamma: None,
    };
    let mut result = ApproxResult::new(gamma.clone(), x, y, trace);
    let (l1, l2) = (&result.residual.x1, &result.residual.x2);
    report.ell = Some(ell);
    report.gamma = Some(gamma);
    report.v1_positive = result.gamma.v1().is_positive();
    report.v2_positive = result.gamma.v2().is_positive();
    report.lambda1_positive = positive(l1)?;
    report.lambda2_positive = positive(l2)?;

    // Λ₂ ≤ x₂ s |ε_{k−1}| ≤ x₂ s_j / q_k holds for any ℓ in [ρ, ρ + 1)
    let sj = target.s(j)?;
    let e1 = xi.abs_epsilon(k as isize - 1)?;
    let mid = &x.x2.mul_int(n.v2()) * &e1;
    let top = &x.x2.mul_int(&sj) * &rat(1, q1.clone());
    let holds = le(l2, &mid)? && le(&mid, &top)?;
    result.bounds.push(
        Bound::new(
            "second_coordinate_window",
            format!("Λ₂ ≈ {:.3e} ≤ x₂ s|ε_(k−1)| ≤ x₂ s_j/q_k ≈ {:.3e}", l2.to_f64(), top.to_f64()),
            top,
            holds,
        )
        .required()?,
    );
    let y_slope = target.value();
    let delta = &y_slope.mul_int(n.v2()) - &int(n.v1());
    let neg = -&delta;
    let sj1 = target.s(j + 1)?;
    let holds = lt(&rat(1, &sj1 * 2u32), &neg)? && le(&neg, &rat(1, sj.clone()))?;
    result.bounds.push(
        Bound::new(
            "slope_error_window",
            format!("1/(2s_(j+1)) < −δ ≈ {:.3e} ≤ 1/s_j", neg.to_f64()),
            rat(1, sj),
            holds,
        )
        .required()?,
    );

    // max(Λ₁, Λ₂) ≤ |γ|^{−μ}  ⇔  max^den · |γ|^num ≤ 1
    if report.lambda1_positive && report.lambda2_positive {
        let top = l1.max_value(l2)?;
        let lhs = top.pow(md).mul_int(&ipow(&result.norm, mn));
        report.within_bound = le(&lhs, &RealValue::one())?;
    }
    let signs = report.v1_positive && report.v2_positive && report.lambda1_positive && report.lambda2_positive;
    result.bounds.push(Bound::new(
        "positive_signs",
        "v₁ > 0, v₂ > 0, Λ₁ > 0, Λ₂ > 0".into(),
        RealValue::zero(),
        signs,
    ));
    result.bounds.push(Bound::new(
        "mu_exponent",
        format!("max(Λ₁, Λ₂) ≤ |γ|^(−{mu})"),
        RealValue::one(),
        report.within_bound,
    ));
    if !report.all_hold() {
        return Err(Error::BoundNotYetReached(Box::new(report)));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::m;
    use proptest::prelude::*;

    fn golden() -> RealValue {
        "surd:(-1+1*sqrt(5))/2".parse().unwrap()
    }

    fn point(s: &str) -> PlanePoint {
        s.parse().unwrap()
    }

    fn golden_pair(y: &str) -> NormalizedPair {
        normalize(&PlanePoint::from_slope(golden()), &point(y)).unwrap()
    }

    fn is_zero(v: &RealValue) -> bool {
        v.signum().unwrap() == Ordering::Equal
    }

    #[test]
    fn normalization_rotates_large_coordinates() {
        let phi: RealValue = "surd:(1+1*sqrt(5))/2".parse().unwrap();
        let pair = normalize(&PlanePoint::from_slope(phi), &point("2,1")).unwrap();
        assert_eq!(pair.pre, UnimodularMatrix::j());
        assert_eq!(pair.x_n.x1.as_rational(), Some(BigRational::from_integer((-1).into())));
        // slope −1/φ = −(√5 − 1)/2
        assert!(is_zero(&(&pair.xi().x().clone() + &golden())));
        assert_eq!(pair.y_n.x1.as_rational(), Some(BigRational::from_integer((-1).into())));
        assert_eq!(pair.y_n.x2.as_rational(), Some(BigRational::from_integer(2.into())));

        let pair = golden_pair("1,2");
        assert_eq!(pair.pre, UnimodularMatrix::identity());
        assert_eq!(pair.post, UnimodularMatrix::identity());

        let r = normalize(&point("1,3"), &point("1,2"));
        assert!(matches!(r, Err(Error::SlopeRational)));
    }

    #[test]
    fn completion_is_canonical() {
        assert_eq!(complete_primitive(&1.into(), &2.into()).unwrap(), m(1, 0, 2, 1));
        assert_eq!(complete_primitive(&(-1).into(), &2.into()).unwrap(), m(-1, 0, 2, -1));
        assert_eq!(complete_primitive(&0.into(), &1.into()).unwrap(), m(0, -1, 1, 0));
        for (a, b) in [(3, 7), (-5, 8), (1, 1), (-1, 1), (4, 9)] {
            let n = complete_primitive(&a.into(), &b.into()).unwrap();
            assert_eq!(n.norm(), BigInt::from(b));
            assert!(n.u2().abs() * 2u32 <= BigInt::from(b));
        }
        assert!(complete_primitive(&2.into(), &4.into()).is_err());
    }

    #[test]
    fn n_matrices_are_unimodular() {
        let t = TargetSlope::irrational("surd:(-1+1*sqrt(2))/1".parse().unwrap()).unwrap();
        for j in 1..10 {
            let n = t.n_j(j).unwrap();
            assert_eq!(n.norm(), t.s(j).unwrap());
            let nt = t.n_tilde_j(j).unwrap();
            assert!(nt.entries().iter().all(|e| !e.is_negative()));
        }
    }

    #[test]
    fn truncation_and_ceiling() {
        let r = |s: &str| -> RealValue { s.parse().unwrap() };
        assert_eq!(choose_ell_truncate(&r("rat:73/10")).unwrap(), 7.into());
        assert_eq!(choose_ell_truncate(&r("rat:-73/10")).unwrap(), (-7).into());
        assert_eq!(choose_ell_truncate(&r("4")).unwrap(), 4.into());
        assert_eq!(choose_ell_ceiling(&r("rat:-73/10")).unwrap(), (-7).into());
        assert_eq!(choose_ell_ceiling(&r("rat:73/10")).unwrap(), 8.into());
    }

    #[test]
    fn rho_expands_the_second_coordinate() {
        let pair = golden_pair("1,1");
        let n = m(1, 0, 1, 1);
        let k = 4;
        let rho = rho(&pair, &n, k).unwrap();
        assert!(rho.is_exact());
        let xi = pair.xi();
        let e4 = xi.convergent(4).unwrap().epsilon;
        let e3 = xi.abs_epsilon(3).unwrap();
        // ℓ = 0: Λ₂ = x₂(s ε₄ + s′|ε₃|) − y₂
        let direct = &(&e4 + &e3) - &RealValue::one();
        let built = build_gamma(&pair, &n, &0.into(), k).unwrap();
        assert!(is_zero(&(&built.residual.x2 - &direct)));
        assert!(is_zero(&(&direct - &(&e3 * &(-&rho)))));

        let ell = choose_ell_truncate(&rho).unwrap();
        let r = build_gamma(&pair, &n, &ell, k).unwrap();
        assert!(le(&r.residual.x2.abs(), &rat(1, xi.q(k).unwrap())).unwrap());
        assert!(matches!(super::rho(&pair, &m(1, 0, 0, 1), 3), Err(Error::ZeroRow)));
    }

    #[test]
    fn identity_factor_gives_convergent_matrix() {
        let pair = golden_pair("1,2");
        for k in 1..8 {
            let r = build_gamma(&pair, &UnimodularMatrix::identity(), &0.into(), k).unwrap();
            assert_eq!(r.gamma, pair.xi().matrix(k).unwrap().matrix);
            assert!(r.norm <= pair.xi().q(k).unwrap() * 2u32);
        }
    }

    #[test]
    fn origin_construction() {
        let pair = normalize(&PlanePoint::from_slope(golden()), &PlanePoint::origin()).unwrap();
        let r2 = approx_origin(&pair, 2).unwrap();
        assert_eq!(r2.norm, BigInt::from(2));
        let r3 = approx_origin(&pair, 3).unwrap();
        assert_eq!(r3.norm, BigInt::from(3));
        // |M₃ x| = |2ξ − 1|
        let d = r3.residual_norm().unwrap();
        let expect = (&golden().mul_int(&2.into()) - &RealValue::one()).abs();
        assert!(is_zero(&(&d - &expect)));
        for k in 1..20 {
            let r = approx_origin(&pair, k).unwrap();
            let e1 = pair.xi().abs_epsilon(k as isize - 1).unwrap();
            assert!(is_zero(&(&r.residual_norm().unwrap() - &e1)));
        }
    }

    #[test]
    fn rational_slope_instance() {
        let pair = golden_pair("1,2");
        let r = approx_rational_slope(&pair, 6).unwrap();
        assert_eq!(r.trace.ell, Some(16.into()));
        assert_eq!(r.gamma, m(-115, 72, -238, 149));
        let r8 = approx_rational_slope(&pair, 8).unwrap();
        assert!(le(&r8.residual_norm().unwrap(), &rat(4, 34)).unwrap());
        assert!(r8.all_hold());
        // a small target leaves |γ| ≈ 2b q_k above 3r q_(k−1)q_k until q_(k−1) grows
        let tiny = golden_pair("rat:1/100,rat:1/50");
        assert!(matches!(approx_rational_slope(&tiny, 4), Err(Error::KTooSmall { k: 4, .. })));
        assert!(approx_rational_slope(&tiny, 14).is_ok());
    }

    #[test]
    fn rational_slope_after_rotation() {
        let pair = golden_pair("3,-2");
        assert_eq!(pair.post, UnimodularMatrix::j());
        for k in 6..12 {
            let r = approx_rational_slope(&pair, k).unwrap();
            let direct = r.gamma.apply(&pair.x).sub(&pair.y).sup_norm().unwrap();
            assert!(is_zero(&(&direct - &r.residual_norm().unwrap())));
        }
    }

    #[test]
    fn irrational_slope_instances() {
        let y = PlanePoint::from_slope("surd:(-1+1*sqrt(2))/1".parse().unwrap());
        let pair = normalize(&PlanePoint::from_slope(golden()), &y).unwrap();
        for j0 in 2..6 {
            let (j, k) = select_indices_small_omega(&pair, j0).unwrap();
            assert!(j >= j0);
            let r = approx_irrational_slope(&pair, j, k).unwrap();
            assert!(r.bound("residual").unwrap().holds);
        }
        let ks: Vec<usize> = (1..7).map(|j0| select_indices_small_omega(&pair, j0).unwrap().1).collect();
        assert!(ks.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn uniform_index() {
        let y = PlanePoint::from_slope("surd:(-1+1*sqrt(2))/1".parse().unwrap());
        let pair = normalize(&PlanePoint::from_slope(golden()), &y).unwrap();
        let third = BigRational::new(1.into(), 3.into());
        let j = select_indices_uniform(&pair, 10, &third).unwrap();
        let t = pair.target().unwrap();
        let q = pair.xi().q(10).unwrap();
        assert!(ipow(&t.s(j).unwrap(), 3) <= q && q < ipow(&t.s(j + 1).unwrap(), 3));
        assert!(select_indices_uniform(&pair, 10, &BigRational::new(3.into(), 4.into())).is_err());
    }

    #[test]
    fn large_omega_stream() {
        let omega = BigRational::new(5.into(), 2.into());
        let y = PlanePoint::from_slope("surd:(-1+1*sqrt(2))/1".parse().unwrap());
        let pair = normalize(&PlanePoint::from_slope(golden()), &y).unwrap();
        assert!(matches!(select_indices_large_omega(&pair, &omega, 1..=30), Err(Error::StreamEmpty(_))));

        let fast: RealValue = "cf:[0;2,8]rule:pow(3)".parse().unwrap();
        // with slope √2 − 1, ρ is an exact integer at (j, k) = (1, 2); √3 − 1 avoids that
        let y = PlanePoint::from_slope("surd:(-1+1*sqrt(3))/1".parse().unwrap());
        let pair = normalize(&PlanePoint::from_slope(fast), &y).unwrap();
        let hits = select_indices_large_omega(&pair, &omega, 1..=5).unwrap();
        assert!(!hits.is_empty());
        for (j, k) in hits {
            let r = approx_irrational_slope(&pair, j, k).unwrap();
            assert!(r.bound("residual").unwrap().holds);
        }
    }

    #[test]
    fn signed_construction_reaches_the_bound() {
        let x = PlanePoint::from_slope(-&golden());
        let phi: RealValue = "surd:(1+1*sqrt(5))/2".parse().unwrap();
        let y = PlanePoint::new(RealValue::one(), phi);
        let mu = BigRational::new(3.into(), 10.into());
        assert!(matches!(approx_signed(&x, &y, 4, &mu), Err(Error::EvenK(4))));
        assert!(matches!(approx_signed(&x, &point("-1,1"), 5, &mu), Err(Error::WrongQuadrant)));
        let mut found = 0;
        for k in (1..200).step_by(2) {
            match approx_signed(&x, &y, k, &mu) {
                Ok(r) => {
                    assert!(r.gamma.v1().is_positive() && r.gamma.v2().is_positive());
                    found += 1;
                    if found == 2 {
                        break;
                    }
                }
                Err(Error::BoundNotYetReached(_)) => {}
                Err(e) => panic!("k = {k}: {e}"),
            }
        }
        assert_eq!(found, 2);
    }

    fn small_matrix() -> impl Strategy<Value = UnimodularMatrix> {
        proptest::collection::vec((0u8..2, -4i64..=4), 0..6).prop_map(|steps| {
            steps.into_iter().fold(UnimodularMatrix::identity(), |acc, (g, e)| {
                let gen = if g == 0 { UnimodularMatrix::j() } else { UnimodularMatrix::u() };
                &acc * &gen.pow(e)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bilinear_identity(n in small_matrix(), ell in -50i64..=50, k in 1usize..15, a in -9i64..=9, b in 1i64..=9) {
            let xi = ContinuedFraction::new(golden()).unwrap();
            let y = rat(a, b);
            let (lhs, rhs) = bilinear_sides(&xi, &y, &n, &ell.into(), k).unwrap();
            prop_assert!(is_zero(&(&lhs - &rhs)));
        }

        #[test]
        fn second_coordinate_factorization(n in small_matrix(), ell in -50i64..=50, k in 1usize..15, y1 in -5i64..=5, y2 in 6i64..=9) {
            prop_assume!(!n.v2().is_zero());
            let pair = normalize(&PlanePoint::from_slope(golden()), &PlanePoint::new(y1.into(), y2.into())).unwrap();
            let rho = rho(&pair, &n, k).unwrap();
            let l = BigInt::from(ell);
            let built = build(&pair, &n, &l, k);
            // the certified bounds are unconditional, so build never fails here
            let built = built.unwrap();
            let e1 = pair.xi().abs_epsilon(k as isize - 1).unwrap();
            let expect = &e1.mul_int(n.v2()) * &(&int(&l) - &rho);
            prop_assert!(is_zero(&(&built.lambda.x2 - &expect)));
        }
    }
}
