//! Truncated Dirichlet series and Euler products for the squarefree
//! generating functions L_S(s), L_T(s), the symmetric-power product L_l(s),
//! and the correction factor U_l(s) with L_S = L_l * U_l.
//!
//! Everything here lives in the half-plane of absolute convergence. The
//! factorization is checked with matched truncations: both sides are expanded
//! as Dirichlet series over n <= N, so the only discrepancies left are
//! rounding. The coefficients of L_l and U_l grow quickly with l (the local
//! factor of L_12 has 4096 parameters), so they are built and convolved in
//! double-double arithmetic.

use num_complex::Complex64;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::eigenform::EigenformTable;
use crate::error::{LfoldError, Result};
use crate::sieve::SquarefreeSieve;
use crate::summation;
use crate::sym::{binomial, ChebyshevExpansion};

/// Smallest real part accepted by the series routines.
pub const MIN_SIGMA_SERIES: f64 = 1.1;
/// Smallest real part accepted by the factorization checks.
pub const MIN_SIGMA_DECOMPOSITION: f64 = 1.5;

/// Unit roundoff of the double-double arithmetic, with slack for the
/// renormalization steps.
const DD_EPS: f64 = 1e-31;

/// Serializes a complex number as `[re, im]`.
pub fn complex_pair<S: serde::Serializer>(z: &Complex64, ser: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(ser)
}

fn check_sigma(s: Complex64, min: f64) -> Result<()> {
    if !(s.re >= min) || !s.im.is_finite() {
        return Err(LfoldError::Domain(format!("Re(s) = {} is below {min}", s.re)));
    }
    Ok(())
}

/// n^{-s}.
#[inline]
pub fn n_pow_neg_s(n: usize, s: Complex64) -> Complex64 {
    let ln = (n as f64).ln();
    Complex64::from_polar((-s.re * ln).exp(), -s.im * ln)
}

/// sum_{n=1}^{N} c(n) n^{-s} with deterministic summation; `coeffs` is indexed by n.
pub fn dirichlet_sum(coeffs: &[f64], s: Complex64, n_max: usize) -> Complex64 {
    let n_max = n_max.min(coeffs.len().saturating_sub(1));
    let (re, im): (Vec<f64>, Vec<f64>) = (1..=n_max)
        .map(|n| {
            let z = n_pow_neg_s(n, s) * coeffs[n];
            (z.re, z.im)
        })
        .unzip();
    Complex64::new(summation::sum(&re), summation::sum(&im))
}

/// Upper bound for zeta(c), c > 1: partial sum plus the integral tail.
pub fn zeta_upper(c: f64) -> f64 {
    const M: usize = 1000;
    let head: f64 = (1..=M).map(|n| (n as f64).powf(-c)).sum();
    head + (M as f64).powf(1.0 - c) / (c - 1.0)
}

fn best_over_c<F: Fn(f64) -> f64>(sigma: f64, log_bound: F) -> f64 {
    // grid over c in (1, sigma); the bound is valid for every c, so take the smallest
    let steps = 96;
    let mut best = f64::INFINITY;
    for i in 1..steps {
        let c = 1.0 + (sigma - 1.0) * i as f64 / steps as f64;
        best = best.min(log_bound(c));
    }
    best.exp()
}

/// Bound for sum_{n > N} d_K(n) n^{-sigma}: N^{c - sigma} zeta(c)^K minimized over c.
pub fn divisor_tail_bound(k: u32, sigma: f64, n_max: usize) -> f64 {
    let ln_n = (n_max as f64).ln();
    best_over_c(sigma, |c| k as f64 * zeta_upper(c).ln() + (c - sigma) * ln_n)
}

/// Bound for sum_{n > N, squarefree} |c(n)| n^{-sigma} for multiplicative `c`
/// with |c(p)| = `prime_abs(p)` for primes up to `known`, and |c(p)| <= K beyond.
pub fn squarefree_tail_bound<F>(sieve: &SquarefreeSieve, known: usize, prime_abs: F, k: f64, sigma: f64, n_max: usize) -> f64
where
    F: Fn(u32) -> f64,
{
    let ln_n = (n_max as f64).ln();
    let primes: Vec<(f64, f64)> = sieve
        .primes()
        .iter()
        .take_while(|&&p| p as usize <= known)
        .map(|&p| ((p as f64).ln(), prime_abs(p)))
        .collect();
    let p0 = known as f64;
    best_over_c(sigma, |c| {
        let head: f64 = primes.iter().map(|&(lp, a)| (a * (-c * lp).exp()).ln_1p()).sum();
        // prod_{p > P0} (1 + K p^{-c}) <= exp(K P0^{1-c} / (c - 1))
        head + k * p0.powf(1.0 - c) / (c - 1.0) + (c - sigma) * ln_n
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncatedSeries {
    pub s: [f64; 2],
    /// Series length, for truncated Dirichlet series.
    pub n_terms: Option<usize>,
    /// Largest prime, for truncated Euler products.
    pub max_prime: Option<usize>,
    #[serde(serialize_with = "complex_pair")]
    pub value: Complex64,
    pub tail_bound: f64,
}

fn check_size(table: &EigenformTable, sieve: &SquarefreeSieve, n: usize) -> Result<()> {
    let size = table.len().min(sieve.len());
    if n == 0 || n > size {
        return Err(LfoldError::Index { index: n as u64, size });
    }
    Ok(())
}

/// sum over squarefree n <= N of lambda(n)^e n^{-s}.
fn squarefree_power_series(
    power: u32,
    table: &EigenformTable,
    sieve: &SquarefreeSieve,
    s: Complex64,
    n_max: usize,
) -> Result<TruncatedSeries> {
    check_sigma(s, MIN_SIGMA_SERIES)?;
    check_size(table, sieve, n_max)?;
    let coeffs: Vec<f64> = (0..=n_max)
        .map(|n| if n >= 1 && sieve.is_squarefree(n) { table.lambda(n).powi(power as i32) } else { 0.0 })
        .collect();
    let value = dirichlet_sum(&coeffs, s, n_max);
    let known = table.len().min(sieve.len());
    let tail_bound = squarefree_tail_bound(
        sieve,
        known,
        |p| table.lambda(p as usize).abs().powi(power as i32),
        2f64.powi(power as i32),
        s.re,
        n_max,
    );
    Ok(TruncatedSeries { s: [s.re, s.im], n_terms: Some(n_max), max_prime: None, value, tail_bound })
}

/// L_S(s) truncated to n <= N.
pub fn l_s_truncated(ell: u32, table: &EigenformTable, sieve: &SquarefreeSieve, s: Complex64, n_max: usize) -> Result<TruncatedSeries> {
    squarefree_power_series(ell, table, sieve, s, n_max)
}

/// L_T(s) truncated to n <= N.
pub fn l_t_truncated(ell: u32, table: &EigenformTable, sieve: &SquarefreeSieve, s: Complex64, n_max: usize) -> Result<TruncatedSeries> {
    squarefree_power_series(2 * ell, table, sieve, s, n_max)
}

/// The Hecke L-series sum_{n <= N} lambda(n) n^{-s}.
pub fn hecke_series_truncated(table: &EigenformTable, s: Complex64, n_max: usize) -> Result<TruncatedSeries> {
    check_sigma(s, MIN_SIGMA_SERIES)?;
    if n_max == 0 || n_max > table.len() {
        return Err(LfoldError::Index { index: n_max as u64, size: table.len() });
    }
    let value = dirichlet_sum(table.lambdas(), s, n_max);
    Ok(TruncatedSeries {
        s: [s.re, s.im],
        n_terms: Some(n_max),
        max_prime: None,
        value,
        tail_bound: divisor_tail_bound(2, s.re, n_max),
    })
}

/// Symmetric powers and their exponents in L_l, as `(m, multiplicity)`.
pub fn l_ell_exponents(ell: u32) -> Result<Vec<(u32, u64)>> {
    Ok(ChebyshevExpansion::new(ell)?.multiplicities())
}

/// Euler product of L_l(s) = prod_n L(s, sym^{l-2n} f)^{C(l,n) - C(l,n-1)} over p <= P.
pub fn l_ell_truncated(ell: u32, table: &EigenformTable, sieve: &SquarefreeSieve, s: Complex64, max_prime: usize) -> Result<TruncatedSeries> {
    check_sigma(s, MIN_SIGMA_SERIES)?;
    check_size(table, sieve, max_prime)?;
    let exps = l_ell_exponents(ell)?;
    let mut re = Vec::new();
    let mut im = Vec::new();
    for &p in sieve.primes().iter().take_while(|&&p| p as usize <= max_prime) {
        let theta = table.satake(p)?.theta;
        let x = n_pow_neg_s(p as usize, s);
        for &(m, c) in &exps {
            for j in 0..=m {
                let alpha = Complex64::from_polar(1.0, (m as f64 - 2.0 * j as f64) * theta);
                let z = -(Complex64::new(1.0, 0.0) - alpha * x).ln() * c as f64;
                re.push(z.re);
                im.push(z.im);
            }
        }
    }
    let value = Complex64::new(summation::sum(&re), summation::sum(&im)).exp();
    // |log| of the omitted factors is at most D sum_{p > P} p^{-sigma} / (1 - p^{-sigma})
    let degree = 2f64.powi(ell as i32);
    let sigma = s.re;
    let pf = max_prime as f64;
    let log_tail = degree * pf.powf(1.0 - sigma) / ((sigma - 1.0) * (1.0 - pf.powf(-sigma)));
    Ok(TruncatedSeries {
        s: [s.re, s.im],
        n_terms: None,
        max_prime: Some(max_prime),
        value,
        tail_bound: value.norm() * log_tail.exp_m1(),
    })
}

// ---- local factors in double-double ----------------------------------------

type Dd = TwoFloat;

fn dd(x: f64) -> Dd {
    TwoFloat::from(x)
}

fn poly_mul(a: &[Dd], b: &[Dd], len: usize) -> Vec<Dd> {
    let mut out = vec![dd(0.0); len];
    for (i, &x) in a.iter().enumerate().take(len) {
        for (j, &y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_pow(base: &[Dd], mut e: u64, len: usize) -> Vec<Dd> {
    let mut acc = vec![dd(0.0); len];
    acc[0] = dd(1.0);
    let mut sq = base[..base.len().min(len)].to_vec();
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_mul(&acc, &sq, len);
        }
        e >>= 1;
        if e > 0 {
            sq = poly_mul(&sq, &sq, len);
        }
    }
    acc
}

/// 1/f as a power series, f[0] = 1.
fn series_inverse(f: &[Dd], len: usize) -> Vec<Dd> {
    let mut g = vec![dd(0.0); len];
    g[0] = dd(1.0);
    for r in 1..len {
        let mut acc = dd(0.0);
        for i in 1..=r.min(f.len() - 1) {
            acc += f[i] * g[r - i];
        }
        g[r] = -acc;
    }
    g
}

/// 2 cos(k theta) for k = 0..=kmax in double-double, from x = 2 cos theta.
fn dd_traces(x: f64, kmax: usize) -> Vec<Dd> {
    let x = dd(x);
    let mut c = vec![dd(2.0), x];
    for k in 2..=kmax.max(1) {
        let next = x * c[k - 1] - c[k - 2];
        c.push(next);
    }
    c.truncate(kmax + 1);
    c
}

/// prod_{j=0}^m (1 - e^{i(m-2j) theta} t) truncated, as a real polynomial.
fn sym_inverse_factor(m: u32, traces: &[Dd], len: usize) -> Vec<Dd> {
    let mut acc = vec![dd(0.0); len];
    acc[0] = dd(1.0);
    for j in 0..=(m / 2) {
        let k = (m - 2 * j) as usize;
        let quad = if k == 0 {
            vec![dd(1.0), dd(-1.0)]
        } else {
            // (1 - e^{ik theta} t)(1 - e^{-ik theta} t)
            vec![dd(1.0), -traces[k], dd(1.0)]
        };
        acc = poly_mul(&acc, &quad, len);
    }
    acc
}

/// Local coefficients at one prime: A(p^r) of L_l and B(p^r) of U_l, r <= R.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionFactor {
    pub ell: u32,
    pub p: u32,
    /// Coefficients of the local factor of L_l.
    pub a: Vec<f64>,
    /// Coefficients of the local factor of 1/L_l; `a_inv[1] = -lambda(p)^l`.
    pub a_inv: Vec<f64>,
    /// Coefficients of the local factor of U_l; `b[1] = 0`.
    pub b: Vec<f64>,
}

struct LocalDd {
    a: Vec<Dd>,
    a_inv: Vec<Dd>,
    b: Vec<Dd>,
}

fn local_dd(ell: u32, lambda_p: f64, r_max: usize, exps: &[(u32, u64)]) -> LocalDd {
    let len = r_max + 1;
    let traces = dd_traces(lambda_p, ell as usize);
    let mut inv = vec![dd(0.0); len];
    inv[0] = dd(1.0);
    for &(m, c) in exps {
        let q = sym_inverse_factor(m, &traces, len);
        inv = poly_mul(&inv, &poly_pow(&q, c, len), len);
    }
    let a = series_inverse(&inv, len);
    let lp = dd(lambda_p);
    let mut lam_pow = dd(1.0);
    for _ in 0..ell {
        lam_pow *= lp;
    }
    // B(p^r) = A^-(p^r) + A^-(p^{r-1}) lambda(p)^l, where A^- are the coefficients of 1/L_l
    let mut b = vec![dd(0.0); len];
    b[0] = dd(1.0);
    for r in 2..len {
        b[r] = inv[r] + inv[r - 1] * lam_pow;
    }
    LocalDd { a, a_inv: inv, b }
}

/// A(p^r) and B(p^r) for r = 0..=R.
pub fn correction_coeffs(ell: u32, table: &EigenformTable, p: u32, r_max: usize) -> Result<CorrectionFactor> {
    if r_max < 2 {
        return Err(LfoldError::Domain("correction coefficients need R >= 2".into()));
    }
    let angle = table.satake(p)?;
    let lambda_p = table.lambda(p as usize);
    debug_assert!((angle.trace() - lambda_p).abs() < 1e-9);
    let exps = l_ell_exponents(ell)?;
    let l = local_dd(ell, lambda_p, r_max, &exps);
    let to_f = |v: &[Dd]| v.iter().map(|x| f64::from(*x)).collect::<Vec<_>>();
    Ok(CorrectionFactor { ell, p, a: to_f(&l.a), a_inv: to_f(&l.a_inv), b: to_f(&l.b) })
}

/// Which factorization to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionPath {
    /// L_S = L_l * U_l.
    Squarefree,
    /// L_T = L_{2l} * G_l, with G_l = U_{2l}.
    Squared,
}

impl DecompositionPath {
    pub fn power(self, ell: u32) -> u32 {
        match self {
            DecompositionPath::Squarefree => ell,
            DecompositionPath::Squared => 2 * ell,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub ell: u32,
    pub path: DecompositionPath,
    pub s: [f64; 2],
    pub n_terms: usize,
    pub max_prime: usize,
    /// Squarefree series value (L_S or L_T).
    #[serde(serialize_with = "complex_pair")]
    pub value: Complex64,
    /// Dirichlet series of the product side, over the same n.
    #[serde(serialize_with = "complex_pair")]
    pub product_value: Complex64,
    /// |value - product_value| / |value|.
    pub residual: f64,
    /// Relative truncation tails of both sides plus the rounding budget.
    pub tail_bound: f64,
    pub rounding_budget: f64,
}

impl DecompositionReport {
    pub fn within_bound(&self) -> bool {
        self.residual <= self.tail_bound
    }
}

/// Coefficient tables of the two factors over n <= N, primes limited to <= P.
pub struct FactorTables {
    pub power: u32,
    pub a: Vec<Dd>,
    pub b: Vec<Dd>,
}

pub fn factor_tables(power: u32, table: &EigenformTable, sieve: &SquarefreeSieve, n_max: usize, max_prime: usize) -> Result<FactorTables> {
    check_size(table, sieve, n_max)?;
    let exps = l_ell_exponents(power)?;
    let mut local: std::collections::HashMap<u32, LocalDd> = std::collections::HashMap::new();
    for &p in sieve.primes().iter().take_while(|&&p| p as usize <= n_max.min(max_prime)) {
        let mut r_max = 1;
        let mut q = p as usize;
        while q * (p as usize) <= n_max {
            q *= p as usize;
            r_max += 1;
        }
        local.insert(p, local_dd(power, table.lambda(p as usize), r_max.max(2), &exps));
    }
    let build = |pick: fn(&LocalDd) -> &Vec<Dd>| -> Vec<Dd> {
        let mut out = vec![dd(0.0); n_max + 1];
        out[1] = dd(1.0);
        for n in 2..=n_max {
            let p = sieve.smallest_prime_factor(n);
            let mut rest = n;
            let mut e = 0;
            while rest % p as usize == 0 {
                rest /= p as usize;
                e += 1;
            }
            let at_pp = match local.get(&p) {
                Some(l) => pick(l)[e],
                None => dd(0.0),
            };
            out[n] = if rest == 1 { at_pp } else { out[n / rest] * out[rest] };
        }
        out
    };
    Ok(FactorTables { power, a: build(|l| &l.a), b: build(|l| &l.b) })
}

/// Dirichlet convolution over n <= N and the matching absolute-value convolution.
fn convolve(a: &[Dd], b: &[Dd], n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c = vec![dd(0.0); n_max + 1];
    let mut mag = vec![0.0f64; n_max + 1];
    for d in 1..=n_max {
        let ad = a[d];
        let ad_abs = f64::from(ad).abs();
        if ad_abs == 0.0 {
            continue;
        }
        let mut n = d;
        let mut e = 1;
        while n <= n_max {
            let be = b[e];
            let be_abs = f64::from(be).abs();
            if be_abs != 0.0 {
                c[n] += ad * be;
                mag[n] += ad_abs * be_abs;
            }
            n += d;
            e += 1;
        }
    }
    (c.into_iter().map(f64::from).collect(), mag)
}

/// Relative residual of L_S = L_l U_l (or L_T = L_{2l} G_l) at matched truncation.
pub fn decomposition_residual(
    ell: u32,
    path: DecompositionPath,
    table: &EigenformTable,
    sieve: &SquarefreeSieve,
    s: Complex64,
    n_max: usize,
    max_prime: usize,
) -> Result<DecompositionReport> {
    let tables = factor_tables(path.power(ell), table, sieve, n_max, max_prime)?;
    decomposition_residual_with(&tables, ell, path, table, sieve, s, n_max, max_prime)
}

/// As [`decomposition_residual`], reusing prebuilt factor tables.
#[allow(clippy::too_many_arguments)]
pub fn decomposition_residual_with(
    tables: &FactorTables,
    ell: u32,
    path: DecompositionPath,
    table: &EigenformTable,
    sieve: &SquarefreeSieve,
    s: Complex64,
    n_max: usize,
    max_prime: usize,
) -> Result<DecompositionReport> {
    check_sigma(s, MIN_SIGMA_DECOMPOSITION)?;
    check_size(table, sieve, n_max)?;
    let power = path.power(ell);
    if tables.power != power || tables.a.len() != n_max + 1 {
        return Err(LfoldError::Domain("factor tables do not match the request".into()));
    }
    let smooth = |n: usize| sieve.factorize(n).iter().all(|&(p, _)| p as usize <= max_prime);
    let lhs: Vec<f64> = (0..=n_max)
        .map(|n| {
            if n >= 1 && sieve.is_squarefree(n) && smooth(n) {
                table.lambda(n).powi(power as i32)
            } else {
                0.0
            }
        })
        .collect();
    let (rhs, mag) = convolve(&tables.a, &tables.b, n_max);
    let value = dirichlet_sum(&lhs, s, n_max);
    let product_value = dirichlet_sum(&rhs, s, n_max);
    let residual = (value - product_value).norm() / value.norm();

    let weights: Vec<f64> = (0..=n_max).map(|n| if n == 0 { 0.0 } else { (n as f64).powf(-s.re) }).collect();
    let abs_lhs: f64 = summation::sum(&lhs.iter().zip(&weights).map(|(c, w)| c.abs() * w).collect::<Vec<_>>());
    let abs_mag: f64 = summation::sum(&mag.iter().zip(&weights).map(|(c, w)| c * w).collect::<Vec<_>>());
    // f64 stages: coefficient products and n^{-s}; double-double stage: the convolution
    let rounding = (64.0 * f64::EPSILON * (power as f64 + 4.0) * abs_lhs + 64.0 * DD_EPS * abs_mag) / value.norm();

    let known = table.len().min(sieve.len());
    let tail = squarefree_tail_bound(
        sieve,
        known,
        |p| table.lambda(p as usize).abs().powi(power as i32),
        2f64.powi(power as i32),
        s.re,
        n_max,
    );
    Ok(DecompositionReport {
        ell,
        path,
        s: [s.re, s.im],
        n_terms: n_max,
        max_prime,
        value,
        product_value,
        residual,
        tail_bound: 2.0 * tail / value.norm() + rounding,
        rounding_budget: rounding,
    })
}

/// Partial products of U_l(sigma) over p <= P for each P in the grid.
///
/// The local factor is the polynomial (1 + lambda(p)^l x) prod (1 - alpha x)
/// over the 2^l parameters, so it is evaluated in closed form at x = p^{-sigma}.
pub fn u_convergence_probe(ell: u32, table: &EigenformTable, sieve: &SquarefreeSieve, sigma: f64, grid: &[usize]) -> Result<Vec<f64>> {
    if !(sigma > 0.5) {
        return Err(LfoldError::Domain(format!("sigma = {sigma} must exceed 1/2")));
    }
    let exps = l_ell_exponents(ell)?;
    let max = grid.iter().copied().max().unwrap_or(0);
    check_size(table, sieve, max.max(1))?;
    let mut sorted = grid.to_vec();
    sorted.sort_unstable();
    let mut logs = Vec::new();
    let mut negatives = 0usize;
    let mut out_sorted = Vec::with_capacity(sorted.len());
    let mut primes = sieve.primes().iter().peekable();
    for &cut in &sorted {
        while let Some(&&p) = primes.peek() {
            if p as usize > cut {
                break;
            }
            primes.next();
            let lp = table.lambda(p as usize);
            let theta = table.satake(p)?.theta;
            let x = (p as f64).powf(-sigma);
            let mut v = 1.0 + lp.powi(ell as i32) * x;
            for &(m, c) in &exps {
                let mut q = 1.0;
                for j in 0..=m {
                    let k = m as f64 - 2.0 * j as f64;
                    if 2 * j < m {
                        q *= 1.0 - 2.0 * (k * theta).cos() * x + x * x;
                    } else if 2 * j == m {
                        q *= 1.0 - x;
                    }
                }
                v *= q.powi(c as i32);
            }
            if v < 0.0 {
                negatives += 1;
            }
            logs.push(v.abs().ln());
        }
        let sign = if negatives % 2 == 0 { 1.0 } else { -1.0 };
        out_sorted.push(sign * summation::sum(&logs).exp());
    }
    Ok(grid
        .iter()
        .map(|g| out_sorted[sorted.iter().position(|s| s == g).expect("grid value present")])
        .collect())
}

/// Order of the pole of L_l at s = 1 for even l: (2/(l+2)) C(l, l/2).
pub fn pole_order(ell: u32) -> Result<u64> {
    if ell == 0 || ell % 2 == 1 {
        return Err(LfoldError::Domain(format!("pole order needs even l >= 2, got {ell}")));
    }
    let c = binomial(ell, (ell / 2) as i64) * 2u32;
    let d = num_bigint::BigInt::from(ell + 2);
    debug_assert!(num_integer::Integer::is_multiple_of(&c, &d));
    u64::try_from(c / d).map_err(|_| LfoldError::Domain("pole order overflows u64".into()))
}
