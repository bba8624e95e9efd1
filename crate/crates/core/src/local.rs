//! Local Dirichlet coefficients at prime powers.
//!
//! An Euler factor prod_j (1 - x_j t)^{-1} over a multiset of unit complex
//! parameters expands as sum_r h_r t^r, where `h_r` is the complete homogeneous
//! symmetric polynomial of the parameters. We get `h_r` from the power sums
//! p_k = sum_j x_j^k through Newton's identity r h_r = sum_{i=1}^r p_i h_{r-i}.
//!
//! For the l-fold product the 2^l parameters are products of one Satake
//! parameter per factor, so p_k = (2 cos k theta)^l. For sym^m they are
//! e^{i(m-2j) theta}, giving p_k = U_m(cos k theta).
//!
//! Values at `p^r` with r >= 2 follow from the Euler product alone; this is a
//! construction of ours rather than a formula stated for the l-fold product.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::eigenform::{EigenformTable, SatakeAngle};
use crate::error::{LfoldError, Result};
use crate::sieve::SquarefreeSieve;
use crate::sym::cheb_u;

/// 2 cos(k theta) for k = 0..=kmax, from the recurrence in 2 cos theta.
fn trace_powers(theta: f64, kmax: usize) -> Vec<f64> {
    let x = 2.0 * theta.cos();
    let mut c = Vec::with_capacity(kmax + 1);
    c.push(2.0);
    if kmax >= 1 {
        c.push(x);
    }
    for k in 2..=kmax {
        let next = x * c[k - 1] - c[k - 2];
        c.push(next);
    }
    c
}

/// p_k = (2 cos k theta)^l for k = 1..=K.
pub fn tensor_power_sums(ell: u32, theta: f64, k_max: usize) -> Vec<f64> {
    let c = trace_powers(theta, k_max);
    c[1..].iter().map(|v| v.powi(ell as i32)).collect()
}

/// p_k = sum_{j=0}^m e^{ik(m-2j) theta} = U_m(cos k theta) for k = 1..=K.
pub fn sym_power_sums(m: u32, theta: f64, k_max: usize) -> Vec<f64> {
    let c = trace_powers(theta, k_max);
    c[1..].iter().map(|v| cheb_u(m, v / 2.0)).collect()
}

/// Coefficients h_0..h_R of one Euler factor at `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSeries {
    pub p: u32,
    pub h: Vec<f64>,
}

impl LocalSeries {
    pub fn max_exponent(&self) -> usize {
        self.h.len() - 1
    }
}

/// Complete homogeneous values h_0..=h_R from power sums p_1..p_R.
pub fn newton_h(power_sums: &[f64], r_max: usize) -> Vec<f64> {
    assert!(power_sums.len() >= r_max, "need {r_max} power sums, got {}", power_sums.len());
    let mut h = Vec::with_capacity(r_max + 1);
    h.push(1.0);
    for r in 1..=r_max {
        let s: f64 = (1..=r).map(|i| power_sums[i - 1] * h[r - i]).sum();
        h.push(s / r as f64);
    }
    h
}

pub fn tensor_local(ell: u32, angle: SatakeAngle, r_max: usize) -> LocalSeries {
    LocalSeries { p: angle.p, h: newton_h(&tensor_power_sums(ell, angle.theta, r_max), r_max) }
}

pub fn sym_local(m: u32, angle: SatakeAngle, r_max: usize) -> LocalSeries {
    LocalSeries { p: angle.p, h: newton_h(&sym_power_sums(m, angle.theta, r_max), r_max) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FactorKind {
    Tensor,
    Sym,
}

/// Memo of prime-power coefficients keyed by (kind, p, degree parameter).
///
/// Stored vectors are prefixes of one deterministic recurrence, so a longer
/// entry replacing a shorter one never changes an already-served value.
#[derive(Debug, Default)]
pub struct LocalCache {
    map: RwLock<HashMap<(FactorKind, u32, u32), Arc<Vec<f64>>>>,
}

impl LocalCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, kind: FactorKind, param: u32, angle: SatakeAngle, r: usize) -> f64 {
        let key = (kind, angle.p, param);
        if let Some(h) = self.map.read().expect("cache lock").get(&key) {
            if h.len() > r {
                return h[r];
            }
        }
        let series = match kind {
            FactorKind::Tensor => tensor_local(param, angle, r),
            FactorKind::Sym => sym_local(param, angle, r),
        };
        let v = series.h[r];
        let mut w = self.map.write().expect("cache lock");
        let entry = w.entry(key).or_insert_with(|| Arc::new(Vec::new()));
        if entry.len() <= r {
            *entry = Arc::new(series.h);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Table of a multiplicative function on `1..=n_max` from its prime-power values.
pub fn multiplicative_table<F>(sieve: &SquarefreeSieve, n_max: usize, mut at_prime_power: F) -> Vec<f64>
where
    F: FnMut(u32, u32) -> f64,
{
    let n_max = n_max.min(sieve.len());
    let mut out = vec![0.0; n_max + 1];
    if n_max >= 1 {
        out[1] = 1.0;
    }
    for n in 2..=n_max {
        let p = sieve.smallest_prime_factor(n);
        let mut rest = n;
        let mut e = 0;
        while rest % p as usize == 0 {
            rest /= p as usize;
            e += 1;
        }
        out[n] = if rest == 1 { at_prime_power(p, e) } else { out[n / rest] * out[rest] };
    }
    out
}

fn check_index(table: &EigenformTable, sieve: &SquarefreeSieve, n: u64) -> Result<()> {
    let size = table.len().min(sieve.len());
    if n == 0 || n as usize > size {
        return Err(LfoldError::Index { index: n, size });
    }
    Ok(())
}

fn coefficient(
    kind: FactorKind,
    param: u32,
    table: &EigenformTable,
    sieve: &SquarefreeSieve,
    cache: &LocalCache,
    n: u64,
) -> Result<f64> {
    check_index(table, sieve, n)?;
    let mut v = 1.0;
    for (p, e) in sieve.factorize(n as usize) {
        let angle = table.satake(p)?;
        v *= cache.get(kind, param, angle, e as usize);
    }
    Ok(v)
}

/// lambda_{f x ... x f}(n) for the l-fold product.
pub fn tensor_coefficient(
    ell: u32,
    table: &EigenformTable,
    sieve: &SquarefreeSieve,
    cache: &LocalCache,
    n: u64,
) -> Result<f64> {
    coefficient(FactorKind::Tensor, ell, table, sieve, cache, n)
}

/// lambda_{sym^m f}(n).
pub fn sym_coefficient(
    m: u32,
    table: &EigenformTable,
    sieve: &SquarefreeSieve,
    cache: &LocalCache,
    n: u64,
) -> Result<f64> {
    coefficient(FactorKind::Sym, m, table, sieve, cache, n)
}

/// l-fold product coefficients for every n <= N.
#[derive(Clone, Debug)]
pub struct TensorCoefficientTable {
    pub ell: u32,
    pub values: Vec<f64>,
}

impl TensorCoefficientTable {
    pub fn build(ell: u32, table: &EigenformTable, sieve: &SquarefreeSieve, n_max: usize) -> Result<Self> {
        let size = table.len().min(sieve.len());
        if n_max > size {
            return Err(LfoldError::Index { index: n_max as u64, size });
        }
        let angles = prime_angles(table, sieve, n_max)?;
        let cache = LocalCache::new();
        let values = multiplicative_table(sieve, n_max, |p, e| {
            cache.get(FactorKind::Tensor, ell, angles[&p], e as usize)
        });
        Ok(TensorCoefficientTable { ell, values })
    }

    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, n: usize) -> f64 {
        self.values[n]
    }
}

/// lambda_{sym^m f}(n) for every n <= N.
pub fn sym_table(m: u32, table: &EigenformTable, sieve: &SquarefreeSieve, n_max: usize) -> Result<Vec<f64>> {
    let angles = prime_angles(table, sieve, n_max)?;
    let cache = LocalCache::new();
    Ok(multiplicative_table(sieve, n_max, |p, e| cache.get(FactorKind::Sym, m, angles[&p], e as usize)))
}

/// Satake angles of every prime up to `n_max`.
pub fn prime_angles(
    table: &EigenformTable,
    sieve: &SquarefreeSieve,
    n_max: usize,
) -> Result<HashMap<u32, SatakeAngle>> {
    sieve
        .primes()
        .iter()
        .take_while(|&&p| p as usize <= n_max)
        .map(|&p| Ok((p, table.satake(p)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenform::{lambda_prime_power, satake_angle};
    use crate::sym::binomial;
    use num_complex::Complex64;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Expands prod_w (1 - e^{i(l-2w) theta} t)^{-C(l,w)} to O(t^{R+1}) by
    /// multiplying geometric series one parameter at a time.
    fn brute_tensor_factor(ell: u32, theta: f64, r_max: usize) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); r_max + 1];
        acc[0] = Complex64::new(1.0, 0.0);
        for w in 0..=ell {
            let x = Complex64::from_polar(1.0, (ell as f64 - 2.0 * w as f64) * theta);
            let mult = binomial(ell, w as i64).to_u64().unwrap();
            for _ in 0..mult {
                // multiply by 1/(1 - x t): running prefix recurrence
                for r in 1..=r_max {
                    let prev = acc[r - 1];
                    acc[r] += x * prev;
                }
            }
        }
        acc
    }

    fn delta_fixture(n: usize) -> (EigenformTable, SquarefreeSieve) {
        (EigenformTable::delta(n).unwrap(), SquarefreeSieve::new(n).unwrap())
    }

    #[test]
    fn power_sum_examples() {
        assert_eq!(tensor_power_sums(2, 0.0, 3), vec![4.0, 4.0, 4.0]);
        let ps = tensor_power_sums(3, PI / 2.0, 2);
        assert!(ps[0].abs() < 1e-15 && (ps[1] + 8.0).abs() < 1e-14);
        let ps = tensor_power_sums(4, 0.7, 1);
        assert!((ps[0] - (2.0 * 0.7f64.cos()).powi(4)).abs() < 1e-13);
        assert!((ps[0] - 5.475292).abs() < 1e-6);
    }

    #[test]
    fn newton_single_parameter() {
        let x: f64 = 0.37;
        let h = newton_h(&[x, x * x], 2);
        assert!((h[1] - x).abs() < 1e-15 && (h[2] - x * x).abs() < 1e-15);
    }

    #[test]
    fn tensor_one_is_hecke() {
        for theta in [0.0, 0.3, 1.1, PI / 2.0, 2.9, PI] {
            let h = newton_h(&tensor_power_sums(1, theta, 8), 8);
            for (r, v) in h.iter().enumerate() {
                assert!((v - lambda_prime_power(2.0 * theta.cos(), r as u32)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tensor_two_at_right_angle() {
        let h = newton_h(&tensor_power_sums(2, PI / 2.0, 2), 2);
        let b = brute_tensor_factor(2, PI / 2.0, 2);
        assert!(h[1].abs() < 1e-14);
        assert!((h[2] - b[2].re).abs() < 1e-12 && b[2].im.abs() < 1e-12);
        assert!((h[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn newton_matches_brute_force() {
        for theta in [0.0, 0.2, 0.9, 1.7, 2.5, PI] {
            for ell in 1..=6 {
                let h = newton_h(&tensor_power_sums(ell, theta, 4), 4);
                let b = brute_tensor_factor(ell, theta, 4);
                for r in 0..=4 {
                    assert!((h[r] - b[r].re).abs() < 1e-9, "ell={ell} theta={theta} r={r}");
                }
            }
        }
    }

    #[test]
    fn tensor_coefficients() {
        let (t, s) = delta_fixture(5000);
        let cache = LocalCache::new();
        assert_eq!(tensor_coefficient(3, &t, &s, &cache, 1).unwrap(), 1.0);
        for n in 1..=5000u64 {
            if s.is_squarefree(n as usize) {
                let v = tensor_coefficient(3, &t, &s, &cache, n).unwrap();
                assert!((v - t.lambda(n as usize).powi(3)).abs() < 1e-9);
            }
        }
        let b = brute_tensor_factor(2, t.satake(2).unwrap().theta, 2);
        assert!((tensor_coefficient(2, &t, &s, &cache, 4).unwrap() - b[2].re).abs() < 1e-12);
        assert!(tensor_coefficient(2, &t, &s, &cache, 5001).is_err());
        assert!(!cache.is_empty());
    }

    #[test]
    fn tensor_table_matches_pointwise() {
        let (t, s) = delta_fixture(3000);
        let tab = TensorCoefficientTable::build(4, &t, &s, 3000).unwrap();
        let cache = LocalCache::new();
        for n in 1..=3000 {
            let v = tensor_coefficient(4, &t, &s, &cache, n as u64).unwrap();
            assert!((tab.get(n) - v).abs() < 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn sym_coefficients() {
        let (t, s) = delta_fixture(1000);
        let cache = LocalCache::new();
        for n in 1..=1000u64 {
            let v = sym_coefficient(1, &t, &s, &cache, n).unwrap();
            assert!((v - t.lambda(n as usize)).abs() < 1e-10, "n = {n}");
        }
        let p3 = sym_coefficient(3, &t, &s, &cache, 7).unwrap();
        assert!((p3 - crate::sym::sym_power_trace(3, t.satake(7).unwrap().theta)).abs() < 1e-12);
    }

    /// sum_{d^m e = n} lambda(e^m), with lambda(e^m) built from prime values by
    /// the Hecke recursion.
    fn convolution_oracle(t: &EigenformTable, s: &SquarefreeSieve, m: u32, n: usize) -> f64 {
        let mut acc = 0.0;
        let mut d = 1usize;
        while d.pow(m) <= n {
            if n % d.pow(m) == 0 {
                let e = n / d.pow(m);
                acc += s
                    .factorize(e)
                    .iter()
                    .map(|&(p, r)| lambda_prime_power(t.lambda(p as usize), r * m))
                    .product::<f64>();
            }
            d += 1;
        }
        acc
    }

    #[test]
    fn sym_square_convolution_identity() {
        let (t, s) = delta_fixture(2000);
        let tab = sym_table(2, &t, &s, 2000).unwrap();
        for n in 1..=2000usize {
            assert!((tab[n] - convolution_oracle(&t, &s, 2, n)).abs() < 1e-9, "n={n}");
        }
    }

    /// The zeta(ms) relation is special to m = 2: at p^2 the sym^3 factor has
    /// h_2 = 10 when theta = 0, while lambda(p^6) + 0 = 7.
    #[test]
    fn convolution_identity_fails_off_square() {
        let (t, s) = delta_fixture(100);
        for m in [1u32, 3, 4] {
            let tab = sym_table(m, &t, &s, 100).unwrap();
            let worst = (1..=100).map(|n| (tab[n] - convolution_oracle(&t, &s, m, n)).abs()).fold(0.0, f64::max);
            assert!(worst > 1e-3, "m={m}");
        }
        let h = sym_local(3, satake_angle(2, 2.0).unwrap(), 2).h;
        assert!((h[2] - 10.0).abs() < 1e-12);
        assert_eq!(lambda_prime_power(2.0, 6), 7.0);
    }

    #[test]
    fn cache_concurrent_inserts_are_consistent() {
        let cache = LocalCache::new();
        let angle = satake_angle(2, -0.53).unwrap();
        let vals: Vec<f64> = std::thread::scope(|sc| {
            let hs: Vec<_> = (0..4)
                .map(|i| {
                    let c = &cache;
                    sc.spawn(move || c.get(FactorKind::Tensor, 3, angle, 2 + i))
                })
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for (i, v) in vals.iter().enumerate() {
            assert_eq!(v.to_bits(), tensor_local(3, angle, 2 + i).h[2 + i].to_bits());
            assert_eq!(cache.get(FactorKind::Tensor, 3, angle, 2 + i).to_bits(), v.to_bits());
        }
    }

    proptest! {
        #[test]
        fn tensor_multiplicative(a in 1u64..300, b in 1u64..300) {
            static FIX: std::sync::OnceLock<(EigenformTable, SquarefreeSieve)> = std::sync::OnceLock::new();
            let (t, s) = FIX.get_or_init(|| delta_fixture(90_000));
            prop_assume!(num_integer::gcd(a, b) == 1);
            let cache = LocalCache::new();
            let ab = tensor_coefficient(3, t, s, &cache, a * b).unwrap();
            let pa = tensor_coefficient(3, t, s, &cache, a).unwrap();
            let pb = tensor_coefficient(3, t, s, &cache, b).unwrap();
            prop_assert!((ab - pa * pb).abs() < 1e-9 * (1.0 + ab.abs()));
        }
    }
}
