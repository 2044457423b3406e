//! `γ = N · G · M_k` with certified column bounds on `G`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive};

use super::{PlanePoint, UnimodularMatrix};
use crate::contfrac::{ContinuedFraction, ConvergentMatrix};
use crate::real::RealValue;
use crate::Error;

/// Data needed to certify the column bounds for `x = (ξ, 1)`.
pub struct Lemma7Hypotheses<'a> {
    /// Continued fraction of `ξ`.
    pub xi: &'a ContinuedFraction,
    pub y: &'a PlanePoint,
    pub t: BigInt,
    pub mu: BigRational,
    /// `s_j`, the lower-left entry of `N`.
    pub s_j: BigInt,
}

/// Column bounds `B₁ = c·s_j·T^{1−μ}/q_k` and `B₂ = c·s_j·q_k·T^{−μ}`
/// (as floats for display; the certification itself is exact).
#[derive(Clone, Debug)]
pub struct ColumnBounds {
    pub b1: f64,
    pub b2: f64,
}

#[derive(Clone, Debug)]
pub struct Factorization {
    pub n: UnimodularMatrix,
    /// `[[m, ℓ], [m′, ℓ′]]`.
    pub g: UnimodularMatrix,
    pub m: ConvergentMatrix,
    /// Present when the bounds were requested and certified.
    pub bounds: Option<ColumnBounds>,
}

impl Factorization {
    pub fn product(&self) -> UnimodularMatrix {
        &(&self.n * &self.g) * &self.m.matrix
    }
}

fn pow_int(b: &BigInt, e: u32) -> BigInt {
    Pow::pow(b, e)
}

/// `real ≥ num/den`, exactly.
fn at_least(real: &RealValue, num: BigInt, den: BigInt) -> Result<bool, Error> {
    Ok(real.compare(&BigRational::new(num, den))? != Ordering::Less)
}

/// `G = N⁻¹ γ M⁻¹`, certifying the column bounds when hypotheses are given.
pub fn factorize(
    gamma: &UnimodularMatrix,
    n: &UnimodularMatrix,
    m: &ConvergentMatrix,
    hyp: Option<&Lemma7Hypotheses>,
) -> Result<Factorization, Error> {
    let g = &(&n.inverse() * gamma) * &m.matrix.inverse();
    let mut f = Factorization {
        n: n.clone(),
        g,
        m: m.clone(),
        bounds: None,
    };
    debug_assert_eq!(&f.product(), gamma);
    if let Some(h) = hyp {
        f.bounds = Some(certify(gamma, &f, h)?);
    }
    Ok(f)
}

fn certify(gamma: &UnimodularMatrix, f: &Factorization, h: &Lemma7Hypotheses) -> Result<ColumnBounds, Error> {
    let k = f.m.k;
    let pre = |what: &str| Error::PreconditionFailed(what.to_string());
    let (num, den) = (h.mu.numer(), h.mu.denom());
    if h.mu.is_negative() || h.mu > BigRational::one() {
        return Err(pre("0 ≤ μ ≤ 1"));
    }
    let num = num.to_u32().ok_or_else(|| pre("μ numerator too large"))?;
    let den = den.to_u32().ok_or_else(|| pre("μ denominator too large"))?;
    let t = &h.t;
    let q0 = h.xi.q(k - 1)?;
    let q1 = h.xi.q(k)?;
    let q2 = h.xi.q(k + 1)?;
    if &q0 * &q1 > *t || *t > &q1 * &q2 {
        return Err(pre("q_{k−1} q_k ≤ T ≤ q_k q_{k+1}"));
    }
    if gamma.norm() > t * 2 {
        return Err(pre("|γ| ≤ 2T"));
    }
    let x = PlanePoint::from_slope(h.xi.x().clone());
    let residual = gamma.apply(&x).sub(h.y).sup_norm()?;
    // |γx − y| ≤ T^{−μ}  ⇔  |γx − y|^den ≤ 1/T^num
    if residual.pow(den).compare(&BigRational::new(BigInt::one(), pow_int(t, num)))? == Ordering::Greater {
        return Err(pre("|γx − y| ≤ T^{−μ}"));
    }
    // s_j ≥ T^{μ/2}  ⇔  s_j^{2den} ≥ T^num
    if pow_int(&h.s_j, 2 * den) < pow_int(t, num) {
        return Err(pre("s_j ≥ T^{μ/2}"));
    }
    let ynorm = h.y.sup_norm()?;
    if ynorm.signum()?.is_eq() {
        return Err(pre("y ≠ 0"));
    }
    let c = ynorm.max_value(&ynorm.recip()?)?.mul_int(&10.into());
    let cd = c.pow(den);
    let g = &f.g;
    let first = g.first_column_norm();
    let second = g.second_column_norm();
    // (max(|m|,|m′|)·q_k)^den ≤ c^den s_j^den T^{den−num}
    if !at_least(
        &cd,
        pow_int(&(&first * &q1), den),
        pow_int(&h.s_j, den) * pow_int(t, den - num),
    )? {
        return Err(Error::BoundViolated(format!(
            "max(|m|,|m′|) = {first} exceeds c s_j T^(1−μ)/q_k"
        )));
    }
    // max(|ℓ|,|ℓ′|)^den T^num ≤ c^den (s_j q_k)^den
    if !at_least(
        &cd,
        pow_int(&second, den) * pow_int(t, num),
        pow_int(&(&h.s_j * &q1), den),
    )? {
        return Err(Error::BoundViolated(format!(
            "max(|ℓ|,|ℓ′|) = {second} exceeds c s_j q_k T^(−μ)"
        )));
    }
    let mu = h.mu.to_f64().unwrap_or(f64::NAN);
    let tf = t.to_f64().unwrap_or(f64::INFINITY);
    let (cf, sf, qf) = (c.to_f64(), h.s_j.to_f64().unwrap_or(f64::NAN), q1.to_f64().unwrap_or(f64::NAN));
    Ok(ColumnBounds {
        b1: cf * sf * tf.powf(1.0 - mu) / qf,
        b2: cf * sf * qf * tf.powf(-mu),
    })
}
