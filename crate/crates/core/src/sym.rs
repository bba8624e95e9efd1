//! Expansion of lambda(p)^l in the symmetric-power basis.
//!
//! With lambda(p) = 2 cos(theta) and lambda_{sym^m}(p) = U_m(cos theta),
//!
//! ```text
//! lambda(p)^l = sum_{n=0}^{floor(l/2)} (C(l, n) - C(l, n-1)) * lambda_{sym^{l-2n}}(p)
//! ```
//!
//! The identity is checked as an equality of integer polynomials in `x`, using
//! U_m(x/2), whose coefficients in `x` are integers.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::eigenform::{satake_angle, EigenformTable, SatakeAngle};
use crate::error::{LfoldError, Result};

/// Threshold on sin(theta) below which closed forms switch to recurrences.
pub const SIN_EPS: f64 = 1e-8;

/// Exact binomial coefficient, zero outside `0..=n`.
pub fn binomial(n: u32, r: i64) -> BigInt {
    if r < 0 || r > n as i64 {
        return BigInt::zero();
    }
    let r = (r as u32).min(n - r as u32);
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// C(l, n) - C(l, n - 1) for `0 <= n <= floor(l / 2)`.
pub fn binomial_delta(ell: u32, n: i64) -> Result<BigInt> {
    if ell == 0 || n < 0 || n > (ell / 2) as i64 {
        return Err(LfoldError::Domain(format!(
            "binomial_delta needs 0 <= n <= {} (ell = {ell}), got n = {n}",
            ell / 2
        )));
    }
    Ok(binomial(ell, n) - binomial(ell, n - 1))
}

/// Multiplicities of `sym^{l-2n}` in the l-th power, indexed by `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChebyshevExpansion {
    pub ell: u32,
    pub coeffs: Vec<BigInt>,
}

impl ChebyshevExpansion {
    pub fn new(ell: u32) -> Result<Self> {
        let coeffs = (0..=(ell / 2) as i64)
            .map(|n| binomial_delta(ell, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChebyshevExpansion { ell, coeffs })
    }

    /// `(m, multiplicity)` pairs with `m = l - 2n`, highest `m` first.
    pub fn terms(&self) -> impl Iterator<Item = (u32, &BigInt)> {
        self.coeffs.iter().enumerate().map(move |(n, c)| (self.ell - 2 * n as u32, c))
    }

    /// Multiplicities as `u64`, for driving floating-point local factors.
    pub fn multiplicities(&self) -> Vec<(u32, u64)> {
        self.terms()
            .map(|(m, c)| (m, u64::try_from(c).expect("multiplicity fits in u64")))
            .collect()
    }
}

/// U_m(x) through the three-term recurrence.
pub fn cheb_u(m: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 0..m {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Integer polynomial, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly(pub Vec<BigInt>);

impl IntPoly {
    fn trim(mut self) -> Self {
        while self.0.len() > 1 && self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        self
    }

    pub fn monomial(deg: usize) -> Self {
        let mut c = vec![BigInt::zero(); deg + 1];
        c[deg] = BigInt::one();
        IntPoly(c)
    }

    fn add_scaled(&mut self, other: &IntPoly, k: &BigInt) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), BigInt::zero());
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += k * b;
        }
    }
}

/// U_m(x/2) as an integer polynomial in `x`, for m = 0..=max.
pub fn u_half_polys(max: u32) -> Vec<IntPoly> {
    let mut out = vec![IntPoly(vec![BigInt::one()])];
    if max >= 1 {
        out.push(IntPoly::monomial(1));
    }
    for m in 2..=max as usize {
        // U_m(x/2) = x U_{m-1}(x/2) - U_{m-2}(x/2)
        let mut next = vec![BigInt::zero(); m + 1];
        for (i, c) in out[m - 1].0.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in out[m - 2].0.iter().enumerate() {
            next[i] -= c;
        }
        out.push(IntPoly(next));
    }
    out
}

/// Exact check of x^l = sum_n binomial_delta(l, n) U_{l-2n}(x/2).
pub fn verify_cheb_identity(ell: u32) -> bool {
    if ell == 0 {
        return false;
    }
    let Ok(exp) = ChebyshevExpansion::new(ell) else {
        return false;
    };
    let u = u_half_polys(ell);
    let mut rhs = IntPoly(vec![BigInt::zero()]);
    for (m, c) in exp.terms() {
        rhs.add_scaled(&u[m as usize], c);
    }
    rhs.trim() == IntPoly::monomial(ell as usize)
}

/// The alternative indexing x^l = sum_{j = l mod 2} A_{l,j} U_{l-j}(x/2) with
/// A_{l,j} = C(l, (l-j)/2) - C(l, (l-j)/2 - 1). Among l >= 1 it holds only for l = 2.
pub fn verify_reversed_index_identity(ell: u32) -> bool {
    if ell == 0 {
        return false;
    }
    let u = u_half_polys(ell);
    let mut rhs = IntPoly(vec![BigInt::zero()]);
    for j in (ell % 2..=ell).step_by(2) {
        let half = ((ell - j) / 2) as i64;
        let a = binomial(ell, half) - binomial(ell, half - 1);
        rhs.add_scaled(&u[(ell - j) as usize], &a);
    }
    rhs.trim() == IntPoly::monomial(ell as usize)
}

/// lambda_{sym^m}(p) = sum_j e^{i(m-2j)theta} = sin((m+1) theta) / sin(theta).
pub fn sym_power_trace(m: u32, theta: f64) -> f64 {
    let s = theta.sin();
    if s.abs() < SIN_EPS {
        cheb_u(m, theta.cos())
    } else {
        ((m + 1) as f64 * theta).sin() / s
    }
}

pub fn sym_power_prime(m: u32, angle: SatakeAngle) -> f64 {
    sym_power_trace(m, angle.theta)
}

/// lambda(p)^l minus its symmetric-power expansion at a prime `p`.
pub fn fcrel_residual(ell: u32, table: &EigenformTable, p: u32) -> Result<f64> {
    let lp = table.try_lambda(p as u64)?;
    let angle = satake_angle(p, lp)?;
    let exp = ChebyshevExpansion::new(ell)?;
    let rhs: f64 = exp
        .multiplicities()
        .iter()
        .map(|&(m, c)| c as f64 * sym_power_prime(m, angle))
        .sum();
    Ok(lp.powi(ell as i32) - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn binomial_delta_values() {
        assert_eq!(binomial_delta(3, 0).unwrap(), BigInt::from(1));
        assert_eq!(binomial_delta(3, 1).unwrap(), BigInt::from(2));
        assert_eq!(binomial_delta(4, 2).unwrap(), BigInt::from(2));
        assert_eq!(binomial_delta(8, 4).unwrap(), BigInt::from(14));
        assert!(binomial_delta(4, 3).is_err());
        assert!(binomial_delta(4, -1).is_err());
    }

    #[test]
    fn binomial_delta_rational_identity() {
        for ell in 1..=64u32 {
            for n in 1..=(ell / 2) as i64 {
                let lhs = BigInt::from(ell as i64 - n + 1) * binomial_delta(ell, n).unwrap();
                let rhs = BigInt::from(ell as i64 - 2 * n + 1) * binomial(ell, n);
                assert_eq!(lhs, rhs, "ell={ell} n={n}");
            }
        }
    }

    #[test]
    fn expansion_coefficients_positive() {
        for ell in 1..=40 {
            let e = ChebyshevExpansion::new(ell).unwrap();
            assert!(e.coeffs[0].is_one());
            assert!(e.coeffs.iter().all(|c| c > &BigInt::zero()));
            // dimension count: sum of multiplicity * (m + 1) = 2^l
            let dim: BigInt = e.terms().map(|(m, c)| c * (m + 1)).sum();
            assert_eq!(dim, BigInt::from(2u32).pow(ell));
        }
        let e3 = ChebyshevExpansion::new(3).unwrap();
        assert_eq!(e3.multiplicities(), vec![(3, 1), (1, 2)]);
    }

    #[test]
    fn chebyshev_u_values() {
        assert_eq!(cheb_u(0, 0.3), 1.0);
        assert_eq!(cheb_u(2, 1.0), 3.0);
        let th: f64 = 0.7;
        assert!((cheb_u(3, th.cos()) - (4.0 * th).sin() / th.sin()).abs() < 1e-12);
    }

    #[test]
    fn half_argument_polys() {
        let u = u_half_polys(3);
        let as_i: Vec<i64> = u[3].0.iter().map(|c| i64::try_from(c).unwrap()).collect();
        assert_eq!(as_i, vec![0, -2, 0, 1]);
    }

    #[test]
    fn identity_holds_exactly() {
        for ell in 1..=20 {
            assert!(verify_cheb_identity(ell), "ell = {ell}");
        }
        assert!(verify_cheb_identity(64));
        assert!(!verify_cheb_identity(0));
    }

    #[test]
    fn reversed_indexing_fails_except_two() {
        assert!(verify_reversed_index_identity(2));
        for ell in (1..=20).filter(|&l| l != 2) {
            assert!(!verify_reversed_index_identity(ell), "ell = {ell}");
        }
    }

    #[test]
    fn sym_power_values() {
        assert_eq!(sym_power_trace(0, 1.1), 1.0);
        assert!((sym_power_trace(1, 1.1) - 2.0 * 1.1f64.cos()).abs() < 1e-15);
        assert!((sym_power_trace(2, PI / 2.0) + 1.0).abs() < 1e-15);
        assert_eq!(sym_power_trace(5, 0.0), 6.0);
        assert!((sym_power_trace(5, PI) + 6.0).abs() < 1e-12);
        assert!((sym_power_trace(4, PI) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn fcrel_on_delta() {
        let t = EigenformTable::delta(10_000).unwrap();
        assert!(fcrel_residual(5, &t, 2).unwrap().abs() < 1e-10);
        let sieve = crate::sieve::SquarefreeSieve::new(10_000).unwrap();
        for &p in sieve.primes() {
            for ell in 1..=12 {
                assert!(fcrel_residual(ell, &t, p).unwrap().abs() < 1e-8);
            }
        }
    }

    #[test]
    fn fcrel_degenerate_angles() {
        let mut lam = vec![0.0, 1.0, 0.0, 2.0, 0.0, 3.0];
        let t = EigenformTable::from_lambda(12, lam.clone()).unwrap();
        assert_eq!(fcrel_residual(3, &t, 2).unwrap(), 0.0);
        assert!(fcrel_residual(2, &t, 3).unwrap().abs() < 1e-14);
        assert!(matches!(
            fcrel_residual(2, &t, 5),
            Err(LfoldError::DeligneViolation { .. })
        ));
        lam[5] = -2.0;
        let t = EigenformTable::from_lambda(12, lam).unwrap();
        assert!(fcrel_residual(7, &t, 5).unwrap().abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn sym_power_bounded(m in 0u32..40, theta in 0.0f64..PI) {
            prop_assert!(sym_power_trace(m, theta).abs() <= (m + 1) as f64 + 1e-9);
        }

        #[test]
        fn sym_power_matches_sum_of_characters(m in 0u32..30, theta in 0.0f64..PI) {
            let direct: f64 = (0..=m).map(|j| ((m as f64 - 2.0 * j as f64) * theta).cos()).sum();
            prop_assert!((direct - sym_power_trace(m, theta)).abs() < 1e-6 * (m + 1) as f64);
        }
    }
}
