//! Fourier coefficients of level-one Hecke eigenforms.
//!
//! The weight-12 discriminant form is built from its product expansion
//! q * prod (1 - q^n)^24. Other weights with a one-dimensional cusp space are
//! accepted as prime coefficients and extended to every `n` through the Hecke
//! recursion and multiplicativity.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{LfoldError, Result};
use crate::qseries;
use crate::sieve::SquarefreeSieve;

/// Largest coefficient table the crate will build.
pub const MAX_TABLE: usize = 10_000_000;

/// Weights with a one-dimensional space of level-one cusp forms.
pub const SUPPORTED_WEIGHTS: [u32; 6] = [12, 16, 18, 20, 22, 26];

/// Clamp applied to |lambda(p)| before taking arccos.
pub const DELIGNE_TOL: f64 = 1e-12;

/// Exact `q`-expansion coefficients `a(1..=N)`; slot 0 is unused.
#[derive(Clone, Debug, PartialEq)]
pub struct QExpansion {
    coeffs: Vec<BigInt>,
}

impl QExpansion {
    /// Wraps coefficients `a(1), a(2), ...`.
    pub fn from_coefficients(a: Vec<BigInt>) -> Self {
        let mut coeffs = Vec::with_capacity(a.len() + 1);
        coeffs.push(BigInt::zero());
        coeffs.extend(a);
        QExpansion { coeffs }
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn a(&self, n: usize) -> &BigInt {
        &self.coeffs[n]
    }

    /// Coefficients indexed by `n`, with slot 0 set to zero.
    pub fn as_slice(&self) -> &[BigInt] {
        &self.coeffs
    }
}

/// Exact coefficients of the discriminant form up to `q^n_max`.
pub fn build_delta_qexpansion(n_max: usize) -> Result<QExpansion> {
    if n_max == 0 {
        return Err(LfoldError::Domain("truncation must be at least 1".into()));
    }
    if n_max > MAX_TABLE {
        return Err(LfoldError::ResourceLimit { requested: n_max, max: MAX_TABLE });
    }
    // a(n) is the coefficient of q^{n-1} in prod (1 - q^k)^24; |a(n)| < 2^137 for n <= 1e7
    let euler = qseries::euler_function(n_max);
    let coeffs = qseries::pow_truncated_exact(&euler, 24, n_max);
    Ok(QExpansion::from_coefficients(coeffs))
}

/// Normalized coefficients lambda(n) = a(n) / n^{(k-1)/2} of an eigenform.
#[derive(Clone, Debug)]
pub struct EigenformTable {
    weight: u32,
    lambda: Vec<f64>,
    exact: Option<Vec<BigInt>>,
}

fn check_weight(k: u32) -> Result<()> {
    if k < 12 || k % 2 == 1 {
        return Err(LfoldError::Domain(format!("weight must be even and at least 12, got {k}")));
    }
    Ok(())
}

fn normalize_one(a: &BigInt, n: usize, k: u32) -> f64 {
    let a = a.to_f64().expect("finite coefficient");
    a / (n as f64).powf((k as f64 - 1.0) / 2.0)
}

/// Normalizes an exact expansion of weight `k`.
pub fn normalize(q: &QExpansion, k: u32) -> Result<EigenformTable> {
    check_weight(k)?;
    if !q.a(1).is_one() {
        return Err(LfoldError::NotNormalized(q.a(1).to_string()));
    }
    let exact = q.as_slice().to_vec();
    let mut lambda = vec![0.0; exact.len()];
    for n in 1..exact.len() {
        lambda[n] = normalize_one(&exact[n], n, k);
    }
    Ok(EigenformTable { weight: k, lambda, exact: Some(exact) })
}

impl EigenformTable {
    /// The discriminant form of weight 12 with `n_max` coefficients.
    pub fn delta(n_max: usize) -> Result<Self> {
        normalize(&build_delta_qexpansion(n_max)?, 12)
    }

    /// Builds a full table from `a(p)` for every prime `p <= n_max`.
    pub fn from_prime_coefficients(k: u32, n_max: usize, primes: &BTreeMap<u32, BigInt>) -> Result<Self> {
        check_weight(k)?;
        if n_max > MAX_TABLE {
            return Err(LfoldError::ResourceLimit { requested: n_max, max: MAX_TABLE });
        }
        let sieve = SquarefreeSieve::new(n_max.max(1))?;
        let mut a = vec![BigInt::zero(); n_max + 1];
        if n_max >= 1 {
            a[1] = BigInt::one();
        }
        for n in 2..=n_max {
            let p = sieve.smallest_prime_factor(n) as usize;
            let mut pe = p;
            while n % (pe * p) == 0 {
                pe *= p;
            }
            if pe == n {
                a[n] = if n == p {
                    primes
                        .get(&(p as u32))
                        .cloned()
                        .ok_or_else(|| LfoldError::Domain(format!("missing a({p})")))?
                } else {
                    // a(p^{r+1}) = a(p) a(p^r) - p^{k-1} a(p^{r-1})
                    let prev = n / p;
                    let prev2 = prev / p;
                    let pk = BigInt::from(p).pow(k - 1);
                    &a[p] * &a[prev] - pk * &a[prev2]
                };
            } else {
                a[n] = &a[pe] * &a[n / pe];
            }
        }
        normalize(&QExpansion { coeffs: a }, k)
    }

    /// Wraps precomputed normalized values (slot 0 ignored).
    pub fn from_lambda(k: u32, lambda: Vec<f64>) -> Result<Self> {
        check_weight(k)?;
        if lambda.len() < 2 || (lambda[1] - 1.0).abs() > 1e-12 {
            return Err(LfoldError::NotNormalized(format!("{:?}", lambda.get(1))));
        }
        Ok(EigenformTable { weight: k, lambda, exact: None })
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    /// Largest `n` in the table.
    pub fn len(&self) -> usize {
        self.lambda.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda[n]
    }

    pub fn try_lambda(&self, n: u64) -> Result<f64> {
        if n == 0 || n as usize > self.len() {
            return Err(LfoldError::Index { index: n, size: self.len() });
        }
        Ok(self.lambda[n as usize])
    }

    /// Normalized values indexed by `n`.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    pub fn exact(&self) -> Option<&[BigInt]> {
        self.exact.as_deref()
    }

    pub fn satake(&self, p: u32) -> Result<SatakeAngle> {
        satake_angle(p, self.try_lambda(p as u64)?)
    }

    /// Checks a(p)^2 <= 4 p^{k-1} in exact arithmetic for every prime up to
    /// `limit`. Returns the first violating prime, if any.
    pub fn deligne_violation_exact(&self, sieve: &SquarefreeSieve, limit: usize) -> Option<u32> {
        let exact = self.exact.as_ref()?;
        let limit = limit.min(self.len()).min(sieve.len());
        sieve
            .primes()
            .iter()
            .take_while(|&&p| p as usize <= limit)
            .find(|&&p| {
                let a = &exact[p as usize];
                a * a > BigInt::from(4u32) * BigInt::from(p).pow(self.weight - 1)
            })
            .copied()
    }

    /// Rebuilds every lambda(n) from the prime values alone.
    pub fn rebuild_from_primes(&self, sieve: &SquarefreeSieve) -> Vec<f64> {
        let n_max = self.len().min(sieve.len());
        let mut out = vec![0.0; n_max + 1];
        if n_max >= 1 {
            out[1] = 1.0;
        }
        for n in 2..=n_max {
            let p = sieve.smallest_prime_factor(n) as usize;
            let mut rest = n;
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            out[n] = lambda_prime_power(self.lambda[p], e) * out[rest];
        }
        out
    }
}

/// Satake angle theta_p with lambda(p) = 2 cos(theta_p).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SatakeAngle {
    pub p: u32,
    pub theta: f64,
}

impl SatakeAngle {
    /// 2 cos theta.
    pub fn trace(&self) -> f64 {
        2.0 * self.theta.cos()
    }
}

pub fn satake_angle(p: u32, lambda_p: f64) -> Result<SatakeAngle> {
    if !lambda_p.is_finite() || lambda_p.abs() > 2.0 + DELIGNE_TOL {
        return Err(LfoldError::DeligneViolation { value: lambda_p.abs() });
    }
    let x = (lambda_p / 2.0).clamp(-1.0, 1.0);
    let theta = x.acos();
    debug_assert!((0.0..=PI).contains(&theta));
    Ok(SatakeAngle { p, theta })
}

/// lambda(p^r) from lambda(p) via lambda(p^{r+1}) = lambda(p) lambda(p^r) - lambda(p^{r-1}).
pub fn lambda_prime_power(lambda_p: f64, r: u32) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 0..r {
        let next = lambda_p * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// lambda(m) lambda(n) - sum_{d | gcd(m, n)} lambda(mn / d^2).
pub fn hecke_residual(table: &EigenformTable, m: u64, n: u64) -> Result<f64> {
    let mn = m.checked_mul(n).unwrap_or(u64::MAX);
    if m == 0 || n == 0 || mn as usize > table.len() {
        return Err(LfoldError::Index { index: mn, size: table.len() });
    }
    let g = num_integer::gcd(m, n);
    let sum: f64 = (1..=g)
        .filter(|d| g % d == 0)
        .map(|d| table.lambda((mn / (d * d)) as usize))
        .sum();
    Ok(table.lambda(m as usize) * table.lambda(n as usize) - sum)
}

// ---- coefficient cache -------------------------------------------------------

const CACHE_MAGIC: &str = "LFOLD-COEFFS v1";

/// Writes `LFOLD-COEFFS v1 weight=<k> N=<N>` followed by one `<n> <a(n)>` line per n.
pub fn write_cache<W: Write>(mut w: W, weight: u32, coeffs: &[BigInt]) -> Result<()> {
    let n_max = coeffs.len().saturating_sub(1);
    writeln!(w, "{CACHE_MAGIC} weight={weight} N={n_max}")?;
    for (n, a) in coeffs.iter().enumerate().skip(1) {
        writeln!(w, "{n} {a}")?;
    }
    w.flush()?;
    Ok(())
}

/// Contents of a coefficient file: the header fields and every listed entry.
#[derive(Clone, Debug, PartialEq)]
pub struct CacheFile {
    pub weight: u32,
    pub n_max: usize,
    pub entries: BTreeMap<u32, BigInt>,
}

impl CacheFile {
    /// True when every `n` in `1..=N` is present.
    pub fn is_complete(&self) -> bool {
        self.entries.len() == self.n_max
            && self.entries.keys().next_back().map(|&k| k as usize) == Some(self.n_max).filter(|&n| n > 0)
    }

    /// Coefficients indexed by `n` (slot 0 zero); requires a complete file.
    pub fn dense(&self) -> Option<Vec<BigInt>> {
        if !self.is_complete() {
            return None;
        }
        let mut v = Vec::with_capacity(self.n_max + 1);
        v.push(BigInt::zero());
        v.extend(self.entries.values().cloned());
        Some(v)
    }

    /// Builds the table, extending by the Hecke recursion if only primes are listed.
    pub fn into_table(self) -> Result<EigenformTable> {
        match self.dense() {
            Some(d) => normalize(&QExpansion { coeffs: d }, self.weight),
            None => EigenformTable::from_prime_coefficients(self.weight, self.n_max, &self.entries),
        }
    }
}

fn parse_header(line: &str) -> Result<(u32, usize)> {
    let bad = |msg: &str| LfoldError::CacheFormat { line: 1, msg: msg.to_string() };
    let rest = line.strip_prefix(CACHE_MAGIC).ok_or_else(|| bad("missing LFOLD-COEFFS v1 header"))?;
    let mut weight = None;
    let mut n_max = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("weight=") {
            weight = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("N=") {
            n_max = v.parse().ok();
        } else {
            return Err(bad(&format!("unexpected token {tok:?}")));
        }
    }
    match (weight, n_max) {
        (Some(w), Some(n)) => Ok((w, n)),
        _ => Err(bad("header needs weight=<k> and N=<N>")),
    }
}

pub fn read_cache<R: BufRead>(r: R) -> Result<CacheFile> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or(LfoldError::CacheFormat { line: 1, msg: "empty file".into() })??;
    let (weight, n_max) = parse_header(header.trim_end())?;
    let mut entries = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| LfoldError::CacheFormat { line: lineno, msg: msg.to_string() };
        let mut it = line.split_whitespace();
        let n: u32 = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad index"))?;
        let a: BigInt = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad coefficient"))?;
        if it.next().is_some() {
            return Err(err("trailing fields"));
        }
        if n == 0 || n as usize > n_max {
            return Err(err("index outside 1..=N"));
        }
        if entries.insert(n, a).is_some() {
            return Err(err("duplicate index"));
        }
    }
    Ok(CacheFile { weight, n_max, entries })
}

/// Loads a cached table if `path` exists with at least `n_max` coefficients,
/// otherwise builds the discriminant table and writes the cache.
pub fn load_or_build_delta(path: &std::path::Path, n_max: usize) -> Result<EigenformTable> {
    if path.exists() {
        let file = read_cache(std::io::BufReader::new(std::fs::File::open(path)?))?;
        if file.weight == 12 && file.n_max >= n_max && file.is_complete() {
            let mut dense = file.dense().expect("complete");
            dense.truncate(n_max + 1);
            return normalize(&QExpansion { coeffs: dense }, 12);
        }
    }
    let q = build_delta_qexpansion(n_max)?;
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp");
    write_cache(std::io::BufWriter::new(std::fs::File::create(&tmp)?), 12, q.as_slice())?;
    std::fs::rename(&tmp, path)?;
    normalize(&q, 12)
}

/// |a| as f64, for diagnostics.
pub fn abs_f64(a: &BigInt) -> f64 {
    a.abs().to_f64().unwrap_or(f64::INFINITY)
}
