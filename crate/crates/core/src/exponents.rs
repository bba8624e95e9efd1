//! Exact error exponents for the squarefree moment sums.
//!
//! For odd l the sum of the l-fold coefficients over squarefree n <= X is
//! O(X^{1 - 1/alpha_l + eps}); for even l the error after the main term is
//! O(X^{1 - 1/beta_l + eps}). Both alpha_l and beta_l are rational, and are
//! evaluated here without rounding and compared with a table of published
//! exponents.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{LfoldError, Result};
use crate::sym::binomial;

/// Reduced fraction with positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(num: i64, den: i64) -> Self {
        ExactRational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big(r: BigRational) -> Self {
        ExactRational(r)
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    pub fn recip(&self) -> Self {
        ExactRational(self.0.recip())
    }

    /// 1 - 1/self.
    pub fn error_exponent(&self) -> Self {
        ExactRational(BigRational::one() - self.0.recip())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for ExactRational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn frac(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

fn int(v: i64) -> BigInt {
    BigInt::from(v)
}

/// (1/2) sum_{n=0}^{upper} (l - 2n + 1)^2 / (l - n + 1) * C(l, n); empty when upper < 0.
fn half_tail_sum(ell: u32, upper: i64) -> BigRational {
    let l = ell as i64;
    let mut acc = BigRational::zero();
    for n in 0..=upper {
        let sq = (l - 2 * n + 1) * (l - 2 * n + 1);
        acc += frac(int(sq) * binomial(ell, n), int(l - n + 1));
    }
    acc / int(2)
}

/// alpha_l for odd l >= 3.
pub fn alpha(ell: u32) -> Result<ExactRational> {
    if ell < 3 || ell % 2 == 0 {
        return Err(LfoldError::Domain(format!("alpha needs odd l >= 3, got {ell}")));
    }
    let h = (ell / 2) as i64;
    let lead = frac(int(2) * binomial(ell, h), int(3 * (h + 2)));
    Ok(ExactRational(lead + half_tail_sum(ell, h - 1)))
}

/// beta_l for even l >= 4.
pub fn beta(ell: u32) -> Result<ExactRational> {
    if ell < 4 || ell % 2 == 1 {
        return Err(LfoldError::Domain(format!("beta needs even l >= 4, got {ell}")));
    }
    let l = ell as i64;
    let h = l / 2;
    let v = frac(int(1), int(4))
        + frac(int(13) * binomial(ell, h), int(21 * (l + 2)))
        + frac(int(15) * binomial(ell, h - 1), int(2 * (l + 4)))
        + half_tail_sum(ell, h - 2);
    Ok(ExactRational(v))
}

/// Admissible range `[1/beta_{2l}, 1/alpha_l)` for the short-interval exponent delta.
pub fn delta_range(ell: u32) -> Result<(ExactRational, ExactRational)> {
    let lower = beta(2 * ell)?.recip();
    let upper = alpha(ell)?.recip();
    if lower >= upper {
        return Err(LfoldError::Domain(format!("empty delta range for l = {ell}: {lower} >= {upper}")));
    }
    Ok((lower, upper))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentKind {
    Alpha,
    Beta,
}

impl fmt::Display for ExponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExponentKind::Alpha => "alpha",
            ExponentKind::Beta => "beta",
        })
    }
}

/// One published error exponent, kept as data.
#[derive(Clone, Copy, Debug)]
pub struct QuotedExponent {
    pub ell: u32,
    pub num: i64,
    pub den: i64,
    pub citation: &'static str,
}

pub const QUOTED: [QuotedExponent; 6] = [
    QuotedExponent { ell: 3, num: 7, den: 10, citation: "published odd-l error table, l = 3" },
    QuotedExponent { ell: 4, num: 257, den: 299, citation: "published even-l error table, l = 4" },
    QuotedExponent { ell: 5, num: 33, den: 38, citation: "published odd-l error table, l = 5" },
    QuotedExponent { ell: 6, num: 589, den: 610, citation: "published even-l error table, l = 6" },
    QuotedExponent { ell: 7, num: 161, den: 164, citation: "published odd-l error table, l = 7" },
    QuotedExponent { ell: 8, num: 1411, den: 1423, citation: "published even-l error table, l = 8" },
];

pub fn quoted(ell: u32) -> Option<&'static QuotedExponent> {
    QUOTED.iter().find(|q| q.ell == ell)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentReport {
    pub ell: u32,
    pub kind: ExponentKind,
    pub value: ExactRational,
    pub error_exponent: ExactRational,
    pub paper_quoted: Option<ExactRational>,
    pub citation: Option<&'static str>,
    /// True when no quoted value exists or the quoted value equals the computed one.
    #[serde(rename = "match")]
    pub matches: bool,
}

pub fn report(ell: u32) -> Result<ExponentReport> {
    let (kind, value) = if ell % 2 == 1 { (ExponentKind::Alpha, alpha(ell)?) } else { (ExponentKind::Beta, beta(ell)?) };
    let error_exponent = value.error_exponent();
    let q = quoted(ell);
    let paper_quoted = q.map(|q| ExactRational::new(q.num, q.den));
    let matches = paper_quoted.as_ref().is_none_or(|p| *p == error_exponent);
    Ok(ExponentReport { ell, kind, value, error_exponent, paper_quoted, citation: q.map(|q| q.citation), matches })
}

/// Reports for l = 3..=8.
pub fn audit_table() -> Vec<ExponentReport> {
    (3..=8).map(|l| report(l).expect("l in 3..=8 is in range")).collect()
}
