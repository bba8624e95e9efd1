//! Smallest-prime-factor sieve with squarefree flags.
//!
//! Every table in the crate is indexed by `n` directly (slot 0 unused), so the
//! sieve is the shared source of factorizations for the multiplicative
//! extensions in [`crate::local`] and the squarefree sums in [`crate::moments`].

use crate::error::{LfoldError, Result};

/// Largest sieve the crate will build.
pub const MAX_SIEVE: usize = 200_000_000;

#[derive(Clone, Debug)]
pub struct SquarefreeSieve {
    n: usize,
    spf: Vec<u32>,
    squarefree: Vec<bool>,
    primes: Vec<u32>,
}

impl SquarefreeSieve {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LfoldError::Domain("sieve size must be at least 1".into()));
        }
        if n > MAX_SIEVE {
            return Err(LfoldError::ResourceLimit { requested: n, max: MAX_SIEVE });
        }
        // linear sieve: each composite is struck exactly once by its smallest prime
        let mut spf = vec![0u32; n + 1];
        let mut primes = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                if p > si {
                    break;
                }
                let m = i * p as usize;
                if m > n {
                    break;
                }
                spf[m] = p;
            }
        }
        let mut squarefree = vec![true; n + 1];
        squarefree[0] = false;
        for &p in &primes {
            let q = p as usize * p as usize;
            if q > n {
                break;
            }
            let mut m = q;
            while m <= n {
                squarefree[m] = false;
                m += q;
            }
        }
        if n >= 1 {
            spf[1] = 1;
        }
        Ok(SquarefreeSieve { n, spf, squarefree, primes })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn is_squarefree(&self, m: usize) -> bool {
        self.squarefree[m]
    }

    pub fn squarefree_flags(&self) -> &[bool] {
        &self.squarefree
    }

    #[inline]
    pub fn smallest_prime_factor(&self, m: usize) -> u32 {
        self.spf[m]
    }

    #[inline]
    pub fn is_prime(&self, m: usize) -> bool {
        m >= 2 && self.spf[m] as usize == m
    }

    /// All primes up to the sieve size, ascending.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Prime factorization as `(p, e)` pairs with ascending `p`.
    pub fn factorize(&self, mut m: usize) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        while m > 1 {
            let p = self.spf[m];
            let mut e = 0;
            while m % p as usize == 0 {
                m /= p as usize;
                e += 1;
            }
            out.push((p, e));
        }
        out
    }

    /// Number of squarefree integers in `1..=x`.
    pub fn count_squarefree(&self, x: usize) -> usize {
        self.squarefree[1..=x.min(self.n)].iter().filter(|&&b| b).count()
    }

    /// True iff every prime dividing `m` does so at least twice (1 counts as squarefull).
    pub fn is_squarefull(&self, m: usize) -> bool {
        self.factorize(m).iter().all(|&(_, e)| e >= 2)
    }

    /// Divisor-count table `d(m)` for `m <= n`.
    pub fn divisor_counts(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.n + 1];
        if self.n >= 1 {
            d[1] = 1;
        }
        for m in 2..=self.n {
            // d is multiplicative: peel off the full power of the smallest prime
            let p = self.spf[m] as usize;
            let mut rest = m / p;
            let mut e = 1;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            d[m] = d[rest] * (e + 1);
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mobius_brute(n: usize) -> i32 {
        let mut m = n;
        let mut mu = 1;
        let mut p = 2;
        while p * p <= m {
            if m % p == 0 {
                m /= p;
                if m % p == 0 {
                    return 0;
                }
                mu = -mu;
            }
            p += 1;
        }
        if m > 1 {
            mu = -mu;
        }
        mu
    }

    #[test]
    fn squarefree_up_to_ten() {
        let s = SquarefreeSieve::new(12).unwrap();
        let sf: Vec<usize> = (1..=10).filter(|&n| s.is_squarefree(n)).collect();
        assert_eq!(sf, vec![1, 2, 3, 5, 6, 7, 10]);
        assert!(!s.is_squarefree(12));
    }

    #[test]
    fn squarefree_count_matches_mobius() {
        let n = 1_000_000;
        let s = SquarefreeSieve::new(n).unwrap();
        assert_eq!(s.count_squarefree(n), 607_926);
        for m in 1..=5000 {
            assert_eq!(s.is_squarefree(m), mobius_brute(m) != 0, "m = {m}");
        }
    }

    #[test]
    fn factorization_and_divisors() {
        let s = SquarefreeSieve::new(10_000).unwrap();
        assert_eq!(s.factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert!(s.factorize(1).is_empty());
        let d = s.divisor_counts();
        for m in 1..=2000usize {
            let brute = (1..=m).filter(|k| m % k == 0).count() as u32;
            assert_eq!(d[m], brute);
        }
        assert!(s.is_squarefull(1) && s.is_squarefull(72) && !s.is_squarefull(12));
    }

    #[test]
    fn rejects_empty_and_huge() {
        assert!(SquarefreeSieve::new(0).is_err());
        assert!(matches!(
            SquarefreeSieve::new(MAX_SIEVE + 1),
            Err(LfoldError::ResourceLimit { .. })
        ));
    }
}
