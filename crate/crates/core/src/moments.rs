//! Squarefree moment sums, the full-range sum through the squarefull x
//! squarefree split, main-term fitting and sign-change scans.

use nalgebra::{DMatrix, DVector};
use num_integer::Integer;
use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;

use crate::dirichlet::pole_order;
use crate::eigenform::EigenformTable;
use crate::error::{LfoldError, Result};
use crate::exponents::delta_range;
use crate::local::TensorCoefficientTable;
use crate::sieve::SquarefreeSieve;
use crate::summation;

/// Default ratio of the geometric fitting grid.
pub fn default_grid_ratio() -> f64 {
    10f64.powf(0.125)
}

/// Increasing integer grid lo, lo*r, lo*r^2, ... capped by hi, always ending at hi.
pub fn geometric_grid(lo: usize, hi: usize, ratio: f64) -> Result<Vec<usize>> {
    if lo == 0 || hi < lo || !(ratio > 1.0) {
        return Err(LfoldError::Domain(format!("bad grid: lo={lo}, hi={hi}, ratio={ratio}")));
    }
    let mut out = Vec::new();
    let mut k = 0i32;
    loop {
        let x = (lo as f64 * ratio.powi(k)).round() as usize;
        if x >= hi {
            break;
        }
        if out.last() != Some(&x) {
            out.push(x);
        }
        k += 1;
    }
    out.push(hi);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentSeries {
    pub ell: u32,
    pub grid: Vec<usize>,
    /// S_l(X): sum of lambda(n)^l over squarefree n <= X.
    pub s: Vec<f64>,
    /// T_l(X): sum of lambda(n)^{2l} over squarefree n <= X.
    pub t: Vec<f64>,
    /// Full sums of the l-fold product coefficients over all n <= X.
    pub a: Option<Vec<f64>>,
}

fn check_grid(grid: &[usize], table: &EigenformTable, sieve: &SquarefreeSieve) -> Result<usize> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
        return Err(LfoldError::Domain("grid must be positive and strictly increasing".into()));
    }
    let max = *grid.last().expect("nonempty");
    let size = table.len().min(sieve.len());
    if max > size {
        return Err(LfoldError::Index { index: max as u64, size });
    }
    Ok(max)
}

/// Prefix sums S_l, T_l (and optionally the full sums) at every grid point.
pub fn moment_sums(
    ell: u32,
    table: &EigenformTable,
    sieve: &SquarefreeSieve,
    grid: &[usize],
    with_full: bool,
) -> Result<MomentSeries> {
    if ell == 0 {
        return Err(LfoldError::Domain("l must be positive".into()));
    }
    let max = check_grid(grid, table, sieve)?;
    // index n - 1 holds the term for n, so a cut at X is the prefix of length X
    let (s_terms, t_terms): (Vec<f64>, Vec<f64>) = (1..=max)
        .into_par_iter()
        .map(|n| {
            if sieve.is_squarefree(n) {
                let v = table.lambda(n).powi(ell as i32);
                (v, v * v)
            } else {
                (0.0, 0.0)
            }
        })
        .unzip();
    let s = summation::prefix_sums_at(&s_terms, grid);
    let t = summation::prefix_sums_at(&t_terms, grid);
    let a = if with_full {
        let tens = TensorCoefficientTable::build(ell, table, sieve, max)?;
        Some(summation::prefix_sums_at(&tens.values[1..], grid))
    } else {
        None
    };
    Ok(MomentSeries { ell, grid: grid.to_vec(), s, t, a })
}

/// Full sum over n <= X of the l-fold product coefficients, computed as
/// sum over squarefull Q of coefficient(Q) times the squarefree sum over R <= X/Q
/// with gcd(R, Q) = 1.
pub fn full_sum(ell: u32, table: &EigenformTable, sieve: &SquarefreeSieve, x: usize) -> Result<f64> {
    check_grid(&[x], table, sieve)?;
    let tens = TensorCoefficientTable::build(ell, table, sieve, x)?;
    let mut outer = Vec::new();
    for q in (1..=x).filter(|&q| sieve.is_squarefull(q)) {
        let cq = tens.get(q);
        if cq == 0.0 {
            continue;
        }
        let inner: Vec<f64> = (1..=x / q)
            .filter(|&r| sieve.is_squarefree(r) && r.gcd(&q) == 1)
            .map(|r| table.lambda(r).powi(ell as i32))
            .collect();
        outer.push(cq * summation::sum(&inner));
    }
    Ok(summation::sum(&outer))
}

/// Direct sum of the l-fold product coefficients over n <= X.
pub fn direct_full_sum(ell: u32, table: &EigenformTable, sieve: &SquarefreeSieve, x: usize) -> Result<f64> {
    check_grid(&[x], table, sieve)?;
    let tens = TensorCoefficientTable::build(ell, table, sieve, x)?;
    Ok(summation::sum(&tens.values[1..]))
}

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub ell: u32,
    pub degree: usize,
    /// c_0, ..., c_d with S(X)/X ~ sum_j c_j (log X)^j.
    pub coefficients: Vec<f64>,
    /// Slope of log|S(X) - X P(log X)| against log X over the upper half of the grid.
    pub residual_exponent: Option<f64>,
    pub r2: f64,
}

/// Least-squares fit of S(X)/X by a degree-d polynomial in log X.
pub fn fit_log_polynomial(xs: &[usize], sums: &[f64], degree: usize) -> Result<(Vec<f64>, f64, Option<f64>)> {
    if xs.len() != sums.len() || xs.len() < degree + 3 {
        return Err(LfoldError::IllConditioned(format!(
            "need at least {} grid points for degree {degree}, got {}",
            degree + 3,
            xs.len()
        )));
    }
    let lo = *xs.iter().min().expect("nonempty") as f64;
    let hi = *xs.iter().max().expect("nonempty") as f64;
    if (hi / lo).log10() < 1.0 {
        return Err(LfoldError::IllConditioned(format!("grid spans less than one decade ({lo}..{hi})")));
    }
    // fit in u = log X / log hi, then rescale
    let scale = hi.ln();
    let m = xs.len();
    let design = DMatrix::from_fn(m, degree + 1, |i, j| ((xs[i] as f64).ln() / scale).powi(j as i32));
    let y = DVector::from_iterator(m, xs.iter().zip(sums).map(|(&x, &s)| s / x as f64));
    let svd = design.clone().svd(true, true);
    let beta = svd
        .solve(&y, 1e-14)
        .map_err(|e| LfoldError::IllConditioned(e.to_string()))?;
    let coefficients: Vec<f64> = (0..=degree).map(|j| beta[j] / scale.powi(j as i32)).collect();

    let fitted = &design * &beta;
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else if ss_res == 0.0 { 1.0 } else { 0.0 };

    let upper: Vec<(f64, f64)> = (m / 2..m)
        .filter_map(|i| {
            let x = xs[i] as f64;
            let r = (sums[i] - x * fitted[i]).abs();
            (r > 0.0).then(|| (x.ln(), r.ln()))
        })
        .collect();
    let residual_exponent = (upper.len() >= 2).then(|| {
        let n = upper.len() as f64;
        let mx = upper.iter().map(|p| p.0).sum::<f64>() / n;
        let my = upper.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = upper.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = upper.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok((coefficients, r2, residual_exponent))
}

/// Main-term fit for even l with the degree fixed by the pole order.
pub fn fit_main_term(series: &MomentSeries) -> Result<FitResult> {
    let degree = (pole_order(series.ell)? - 1) as usize;
    let (coefficients, r2, residual_exponent) = fit_log_polynomial(&series.grid, &series.s, degree)?;
    Ok(FitResult { ell: series.ell, degree, coefficients, residual_exponent, r2 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignChangeRecord {
    pub ell: u32,
    pub x: usize,
    pub delta: Option<f64>,
    pub window_lo: usize,
    pub window_hi: usize,
    /// Consecutive nonzero squarefree values of opposite sign.
    pub pairs: Vec<(usize, usize)>,
    pub count: usize,
    /// No nonzero squarefree value in the window.
    pub all_zero: bool,
    /// Whether delta lies in the admissible range for this l.
    pub delta_in_range: Option<bool>,
}

/// Sign of lambda(n), from exact coefficients when present.
pub fn coefficient_sign(table: &EigenformTable, n: usize) -> i8 {
    if let Some(exact) = table.exact() {
        let a = &exact[n];
        return if a.is_positive() { 1 } else if a.is_negative() { -1 } else { 0 };
    }
    let v = table.lambda(n);
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn scan(ell: u32, table: &EigenformTable, sieve: &SquarefreeSieve, lo: usize, hi: usize) -> Result<(Vec<(usize, usize)>, bool)> {
    if ell % 2 == 0 {
        return Err(LfoldError::Domain(format!("sign scans need odd l, got {ell}")));
    }
    if lo == 0 || hi < lo {
        return Err(LfoldError::Domain(format!("empty window [{lo}, {hi}]")));
    }
    let size = table.len().min(sieve.len());
    if hi > size {
        return Err(LfoldError::Index { index: hi as u64, size });
    }
    // odd powers keep the sign, so only sign(lambda(n)) is needed
    let mut pairs = Vec::new();
    let mut last: Option<(usize, i8)> = None;
    let mut any = false;
    for n in (lo..=hi).filter(|&n| sieve.is_squarefree(n)) {
        let sg = coefficient_sign(table, n);
        if sg == 0 {
            continue;
        }
        any = true;
        if let Some((m, prev)) = last {
            if prev != sg {
                pairs.push((m, n));
            }
        }
        last = Some((n, sg));
    }
    Ok((pairs, !any))
}

/// Sign changes in the window [X, X + floor(X^{1 - delta})].
pub fn window_sign_scan(ell: u32, table: &EigenformTable, sieve: &SquarefreeSieve, x: usize, delta: f64) -> Result<SignChangeRecord> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(LfoldError::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    let h = (x as f64).powf(1.0 - delta).floor() as usize;
    let hi = x + h;
    let (pairs, all_zero) = scan(ell, table, sieve, x, hi)?;
    let delta_in_range = delta_range(ell).ok().map(|(lo, up)| delta >= lo.to_f64() && delta < up.to_f64());
    Ok(SignChangeRecord {
        ell,
        x,
        delta: Some(delta),
        window_lo: x,
        window_hi: hi,
        count: pairs.len(),
        pairs,
        all_zero,
        delta_in_range,
    })
}

/// Sign changes over [X, 2X].
pub fn count_sign_changes(ell: u32, table: &EigenformTable, sieve: &SquarefreeSieve, x: usize) -> Result<SignChangeRecord> {
    let (pairs, all_zero) = scan(ell, table, sieve, x, 2 * x)?;
    Ok(SignChangeRecord {
        ell,
        x,
        delta: None,
        window_lo: x,
        window_hi: 2 * x,
        count: pairs.len(),
        pairs,
        all_zero,
        delta_in_range: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::{tensor_coefficient, LocalCache};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn fixture() -> &'static (EigenformTable, SquarefreeSieve) {
        static F: OnceLock<(EigenformTable, SquarefreeSieve)> = OnceLock::new();
        F.get_or_init(|| (EigenformTable::delta(200_000).unwrap(), SquarefreeSieve::new(200_000).unwrap()))
    }

    #[test]
    fn grid_shape() {
        let g = geometric_grid(10_000, 1_000_000, default_grid_ratio()).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!((g[0], *g.last().unwrap()), (10_000, 1_000_000));
        assert_eq!(g[8], 100_000);
        assert!(geometric_grid(10, 5, 2.0).is_err());
    }

    #[test]
    fn sums_at_one() {
        let (t, s) = fixture();
        let m = moment_sums(3, t, s, &[1], true).unwrap();
        assert_eq!((m.s[0], m.t[0], m.a.unwrap()[0]), (1.0, 1.0, 1.0));
    }

    #[test]
    fn odd_sums_match_tensor_coefficients() {
        let (t, s) = fixture();
        let grid = [10, 1000, 20_000];
        let m = moment_sums(3, t, s, &grid, false).unwrap();
        let cache = LocalCache::new();
        for (i, &x) in grid.iter().enumerate() {
            let direct: f64 = (1..=x)
                .filter(|&n| s.is_squarefree(n))
                .map(|n| tensor_coefficient(3, t, s, &cache, n as u64).unwrap())
                .sum();
            assert!((m.s[i] - direct).abs() < 1e-8 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn even_sums_nondecreasing() {
        let (t, s) = fixture();
        let grid: Vec<usize> = (1..=200).map(|k| k * 997).collect();
        let m = moment_sums(2, t, s, &grid, false).unwrap();
        assert!(m.s.windows(2).all(|w| w[0] <= w[1]) && m.s[0] >= 0.0);
        assert!(m.t.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn thread_count_does_not_change_sums() {
        let (t, s) = fixture();
        let grid = geometric_grid(100, 200_000, default_grid_ratio()).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| moment_sums(4, t, s, &grid, true).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn full_sum_split_matches_direct() {
        let (t, s) = fixture();
        assert_eq!(full_sum(3, t, s, 1).unwrap(), 1.0);
        for ell in 1..=4 {
            for x in [7usize, 100, 2_500, 10_000] {
                let a = full_sum(ell, t, s, x).unwrap();
                let b = direct_full_sum(ell, t, s, x).unwrap();
                assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "l={ell} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn full_sums_in_series_match_direct() {
        let (t, s) = fixture();
        let m = moment_sums(2, t, s, &[50, 5000], true).unwrap();
        let a = m.a.unwrap();
        assert!((a[1] - direct_full_sum(2, t, s, 5000).unwrap()).abs() < 1e-9 * a[1].abs().max(1.0));
    }

    #[test]
    fn synthetic_fit_recovers_coefficients() {
        let grid = geometric_grid(100, 1_000_000, default_grid_ratio()).unwrap();
        let sums: Vec<f64> = grid.iter().map(|&x| x as f64 * (2.0 * (x as f64).ln() + 3.0)).collect();
        let (c, r2, _) = fit_log_polynomial(&grid, &sums, 1).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-6 && (c[1] - 2.0).abs() < 1e-6);
        assert!(r2 > 0.999_999);
        let sums: Vec<f64> = grid
            .iter()
            .map(|&x| {
                let l = (x as f64).ln();
                x as f64 * (0.5 - 0.25 * l + 0.125 * l * l + 0.01 * l.powi(3) + 1e-3 * l.powi(4))
            })
            .collect();
        let (c, _, _) = fit_log_polynomial(&grid, &sums, 4).unwrap();
        for (got, want) in c.iter().zip([0.5, -0.25, 0.125, 0.01, 1e-3]) {
            assert!((got - want).abs() < 1e-6, "{c:?}");
        }
    }

    #[test]
    fn fit_rejects_short_span() {
        let grid = [1000, 1500, 2000, 3000, 5000];
        let sums = [1.0; 5];
        assert!(matches!(fit_log_polynomial(&grid, &sums, 1), Err(LfoldError::IllConditioned(_))));
        assert!(fit_log_polynomial(&[10, 1000], &[1.0, 1.0], 1).is_err());
    }

    #[test]
    fn sym_square_mean_is_constant() {
        let (t, s) = fixture();
        let grid = geometric_grid(1000, 200_000, default_grid_ratio()).unwrap();
        let m = moment_sums(2, t, s, &grid, false).unwrap();
        let fit = fit_main_term(&m).unwrap();
        assert_eq!(fit.degree, 0);
        assert!(fit.coefficients[0] > 0.0);
        assert!(fit_main_term(&moment_sums(3, t, s, &grid, false).unwrap()).is_err());
    }

    #[test]
    fn sign_scan_examples() {
        let (t, s) = fixture();
        let w3 = window_sign_scan(3, t, s, 100_000, 0.3).unwrap();
        let w5 = window_sign_scan(5, t, s, 100_000, 0.3).unwrap();
        assert!(w3.count >= 1 && !w3.all_zero);
        assert_eq!(w3.delta_in_range, Some(true));
        assert_eq!((w3.pairs.clone(), w3.window_hi), (w5.pairs.clone(), w5.window_hi));
        for &(a, b) in &w3.pairs {
            assert!(t.lambda(a) * t.lambda(b) < 0.0);
            assert!(s.is_squarefree(a) && s.is_squarefree(b));
        }
        assert!(window_sign_scan(4, t, s, 1000, 0.3).is_err());
        assert!(window_sign_scan(3, t, s, 199_000, 0.3).is_err());
        let c = count_sign_changes(3, t, s, 1).unwrap();
        assert_eq!((c.window_lo, c.window_hi), (1, 2));
        assert_eq!(c.count, 1); // lambda(1) = 1, lambda(2) < 0
    }

    #[test]
    fn zero_window_is_flagged() {
        let mut lam = vec![0.0; 101];
        lam[1] = 1.0;
        let t = EigenformTable::from_lambda(12, lam).unwrap();
        let s = SquarefreeSieve::new(100).unwrap();
        let w = window_sign_scan(3, &t, &s, 50, 0.5).unwrap();
        assert!(w.all_zero && w.count == 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn odd_powers_share_sign_changes(x in 1usize..90_000, ell in prop::sample::select(vec![1u32, 3, 5, 7])) {
            let (t, s) = fixture();
            let a = count_sign_changes(ell, t, s, x).unwrap();
            let b = count_sign_changes(3, t, s, x).unwrap();
            prop_assert_eq!(a.pairs, b.pairs);
        }

        #[test]
        fn prefix_consistent_under_refinement(a in 1usize..100_000, b in 1usize..100_000) {
            let (t, s) = fixture();
            let (lo, hi) = if a < b { (a, b) } else if a > b { (b, a) } else { return Ok(()) };
            let coarse = moment_sums(3, t, s, &[hi], false).unwrap();
            let fine = moment_sums(3, t, s, &[lo, hi], false).unwrap();
            prop_assert_eq!(coarse.s[0], fine.s[1]);
            let span: f64 = (lo + 1..=hi).filter(|&n| s.is_squarefree(n)).map(|n| t.lambda(n).powi(3)).sum();
            prop_assert!((fine.s[1] - fine.s[0] - span).abs() < 1e-9 * (1.0 + span.abs() + fine.s[1].abs()));
        }
    }
}
