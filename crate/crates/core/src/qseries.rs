//! Exact truncated power series in `q`.
//!
//! Large products run as number-theoretic transforms modulo five 31-bit primes
//! and are lifted back to signed integers by Garner's mixed-radix CRT. The
//! combined modulus is about 2^149, so any series whose true coefficients stay
//! below 2^148 in absolute value is recovered exactly. A schoolbook
//! `BigInt` product is kept alongside as the reference path.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

/// NTT-friendly primes: each has 2^25 dividing p - 1.
const PRIMES: [u64; 5] = [2013265921, 1811939329, 469762049, 167772161, 2113929217];

/// Largest transform length supported by every prime in [`PRIMES`].
const MAX_LOG_LEN: u32 = 25;

#[inline]
fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    a * b % p
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, p);
        }
        b = mul_mod(b, b, p);
        e >>= 1;
    }
    r
}

fn primitive_root(p: u64) -> u64 {
    let mut factors = Vec::new();
    let mut m = p - 1;
    let mut f = 2;
    while f * f <= m {
        if m % f == 0 {
            factors.push(f);
            while m % f == 0 {
                m /= f;
            }
        }
        f += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    (2..p)
        .find(|&g| factors.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1))
        .expect("prime field has a generator")
}

struct Ntt {
    p: u64,
    g: u64,
}

impl Ntt {
    fn new(p: u64) -> Self {
        Ntt { p, g: primitive_root(p) }
    }

    fn transform(&self, a: &mut [u64], invert: bool) {
        let n = a.len();
        let p = self.p;
        let mut j = 0;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                a.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let mut w = pow_mod(self.g, (p - 1) / len as u64, p);
            if invert {
                w = pow_mod(w, p - 2, p);
            }
            let half = len / 2;
            let mut tw = Vec::with_capacity(half);
            let mut cur = 1;
            for _ in 0..half {
                tw.push(cur);
                cur = mul_mod(cur, w, p);
            }
            for chunk in a.chunks_mut(len) {
                let (lo, hi) = chunk.split_at_mut(half);
                for k in 0..half {
                    let u = lo[k];
                    let v = mul_mod(hi[k], tw[k], p);
                    lo[k] = if u + v >= p { u + v - p } else { u + v };
                    hi[k] = if u >= v { u - v } else { u + p - v };
                }
            }
            len <<= 1;
        }
        if invert {
            let inv_n = pow_mod(n as u64, p - 2, p);
            for x in a.iter_mut() {
                *x = mul_mod(*x, inv_n, p);
            }
        }
    }

    /// Product of `a` and `b` truncated to `len` coefficients.
    fn mul_truncated(&self, a: &[u64], b: &[u64], len: usize) -> Vec<u64> {
        let a = &a[..a.len().min(len)];
        let b = &b[..b.len().min(len)];
        let need = (a.len() + b.len()).saturating_sub(1).max(1);
        let size = need.next_power_of_two();
        assert!(size <= 1 << MAX_LOG_LEN, "transform length {size} too large");
        let mut fa = vec![0u64; size];
        fa[..a.len()].copy_from_slice(a);
        self.transform(&mut fa, false);
        if std::ptr::eq(a, b) {
            for x in fa.iter_mut() {
                *x = mul_mod(*x, *x, self.p);
            }
        } else {
            let mut fb = vec![0u64; size];
            fb[..b.len()].copy_from_slice(b);
            self.transform(&mut fb, false);
            for (x, y) in fa.iter_mut().zip(&fb) {
                *x = mul_mod(*x, *y, self.p);
            }
        }
        self.transform(&mut fa, true);
        fa.truncate(len);
        fa.resize(len, 0);
        fa
    }

    fn pow_truncated(&self, base: &[u64], exp: u32, len: usize) -> Vec<u64> {
        let mut result: Option<Vec<u64>> = None;
        let mut sq = base[..base.len().min(len)].to_vec();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => sq.clone(),
                    Some(r) => self.mul_truncated(&r, &sq, len),
                });
            }
            e >>= 1;
            if e > 0 {
                sq = self.mul_truncated(&sq, &sq, len);
            }
        }
        let mut r = result.unwrap_or_else(|| {
            let mut one = vec![0u64; len];
            one[0] = 1;
            one
        });
        r.resize(len, 0);
        r
    }
}

fn reduce_signed(c: i64, p: u64) -> u64 {
    c.rem_euclid(p as i64) as u64
}

/// Lifts per-prime residues to the unique signed integer of absolute value
/// below half the combined modulus.
fn garner(residues: &[Vec<u64>]) -> Vec<BigInt> {
    let k = residues.len();
    // inv[i][j] = PRIMES[j]^{-1} mod PRIMES[i] for j < i
    let mut inv = vec![vec![0u64; k]; k];
    for i in 0..k {
        for j in 0..i {
            inv[i][j] = pow_mod(PRIMES[j] % PRIMES[i], PRIMES[i] - 2, PRIMES[i]);
        }
    }
    let modulus: BigInt = PRIMES[..k].iter().map(|&p| BigInt::from(p)).product();
    let half = &modulus >> 1;
    let len = residues[0].len();
    (0..len)
        .into_par_iter()
        .map(|idx| {
            let mut digits = [0u64; 5];
            for i in 0..k {
                let p = PRIMES[i];
                let mut x = residues[i][idx];
                for j in 0..i {
                    let d = digits[j] % p;
                    x = if x >= d { x - d } else { x + p - d };
                    x = mul_mod(x, inv[i][j], p);
                }
                digits[i] = x;
            }
            let mut v = BigInt::zero();
            for i in (0..k).rev() {
                v = v * PRIMES[i] + digits[i];
            }
            if v > half {
                v -= &modulus;
            }
            v
        })
        .collect()
}

/// Coefficients of prod_{k>=1} (1 - q^k) up to q^{len-1}, from the pentagonal
/// number theorem: (-1)^j at exponents j(3j -/+ 1)/2.
pub fn euler_function(len: usize) -> Vec<i64> {
    let mut c = vec![0i64; len];
    if len == 0 {
        return c;
    }
    c[0] = 1;
    let mut j: usize = 1;
    loop {
        let sign = if j % 2 == 1 { -1 } else { 1 };
        let e1 = j * (3 * j - 1) / 2;
        let e2 = j * (3 * j + 1) / 2;
        if e1 >= len {
            break;
        }
        c[e1] = sign;
        if e2 < len {
            c[e2] = sign;
        }
        j += 1;
    }
    c
}

/// `base^exp` truncated to `len` coefficients, exactly, for a series with
/// small integer coefficients. The caller guarantees the true coefficients of
/// the result are below 2^148 in absolute value.
pub fn pow_truncated_exact(base: &[i64], exp: u32, len: usize) -> Vec<BigInt> {
    let residues: Vec<Vec<u64>> = PRIMES
        .par_iter()
        .map(|&p| {
            let ntt = Ntt::new(p);
            let b: Vec<u64> = base.iter().map(|&c| reduce_signed(c, p)).collect();
            ntt.pow_truncated(&b, exp, len)
        })
        .collect();
    garner(&residues)
}

/// Schoolbook product of two exact series, truncated to `len` coefficients.
pub fn schoolbook_mul(a: &[BigInt], b: &[BigInt], len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Reference path: `base^exp` by repeated schoolbook multiplication.
pub fn schoolbook_pow(base: &[i64], exp: u32, len: usize) -> Vec<BigInt> {
    let b: Vec<BigInt> = base.iter().take(len).map(|&c| BigInt::from(c)).collect();
    let mut acc = vec![BigInt::zero(); len];
    if len > 0 {
        acc[0] = BigInt::one();
    }
    for _ in 0..exp {
        acc = schoolbook_mul(&acc, &b, len);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_support_max_length() {
        for &p in &PRIMES {
            assert_eq!((p - 1) % (1 << MAX_LOG_LEN), 0);
            assert!(p < 1 << 31);
        }
    }

    #[test]
    fn pentagonal_matches_direct_product() {
        let len = 60;
        let mut direct = vec![0i64; len];
        direct[0] = 1;
        for k in 1..len {
            for i in (k..len).rev() {
                direct[i] -= direct[i - k];
            }
        }
        assert_eq!(euler_function(len), direct);
    }

    #[test]
    fn ntt_power_matches_schoolbook() {
        let e = euler_function(200);
        for exp in [1, 2, 3, 7, 24] {
            assert_eq!(pow_truncated_exact(&e, exp, 200), schoolbook_pow(&e, exp, 200), "exp {exp}");
        }
    }

    #[test]
    fn negative_and_large_values_lift() {
        // (1 - 1000 q)^9 has coefficients up to ~1.3e29 with alternating signs
        let base = vec![1, -1000];
        let got = pow_truncated_exact(&base, 9, 10);
        assert_eq!(got, schoolbook_pow(&base, 9, 10));
        assert!(got[9] < BigInt::zero());
    }
}
