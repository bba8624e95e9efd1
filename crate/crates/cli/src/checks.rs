//! Consistency checks shared by `coeffs --check` and `audit`.

use lfold_core::dirichlet::{correction_coeffs, decomposition_residual, DecompositionPath};
use lfold_core::eigenform::{hecke_residual, lambda_prime_power, DELIGNE_TOL};
use lfold_core::exponents::{audit_table, delta_range};
use lfold_core::local::{newton_h, sym_table, tensor_power_sums};
use lfold_core::moments::{direct_full_sum, full_sum};
use lfold_core::sym::{fcrel_residual, verify_cheb_identity, verify_reversed_index_identity};
use lfold_core::{EigenformTable, Result, SquarefreeSieve};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// A documented discrepancy in the source material; does not fail the run.
    Warning,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

fn check(name: impl Into<String>, ok: bool, detail: String) -> Check {
    Check { name: name.into(), status: if ok { Status::Pass } else { Status::Fail }, detail }
}

pub const HECKE_SAMPLES: usize = 1000;
pub const HECKE_SEED: u64 = 0x1f0d;

/// Checks on the coefficient table itself.
pub fn table_checks(table: &EigenformTable, sieve: &SquarefreeSieve) -> Result<Vec<Check>> {
    let n = table.len().min(sieve.len());
    let mut out = Vec::new();

    let deligne = if table.exact().is_some() {
        match table.deligne_violation_exact(sieve, n) {
            None => check("deligne_exact", true, format!("a(p)^2 <= 4 p^(k-1) for all primes p <= {n}")),
            Some(p) => check("deligne_exact", false, format!("violated at p = {p}")),
        }
    } else {
        let bad = sieve.primes().iter().take_while(|&&p| p as usize <= n).find(|&&p| table.lambda(p as usize).abs() > 2.0 + DELIGNE_TOL);
        check("deligne", bad.is_none(), format!("first violation: {bad:?}"))
    };
    out.push(deligne);

    let d = sieve.divisor_counts();
    let bad = (1..=n).find(|&m| table.lambda(m).abs() > d[m] as f64 * (1.0 + 1e-12));
    out.push(check("divisor_bound", bad.is_none(), format!("|lambda(n)| <= d(n) for n <= {n}; first violation: {bad:?}")));

    let mut rng = StdRng::seed_from_u64(HECKE_SEED);
    let mut worst = 0.0f64;
    let mut samples = 0;
    if n >= 2 {
        while samples < HECKE_SAMPLES {
            let m = rng.gen_range(1..=n as u64);
            let k = rng.gen_range(1..=(n as u64 / m).max(1));
            if m * k > n as u64 {
                continue;
            }
            worst = worst.max(hecke_residual(table, m, k)?.abs());
            samples += 1;
        }
    }
    out.push(check("hecke_residuals", worst < 1e-10, format!("{samples} random pairs, max |residual| = {worst:e}")));

    let rebuilt = table.rebuild_from_primes(sieve);
    let diff = (1..rebuilt.len()).map(|m| (rebuilt[m] - table.lambda(m)).abs()).fold(0.0, f64::max);
    out.push(check("multiplicative_rebuild", diff < 1e-10, format!("max |lambda - rebuilt| = {diff:e}")));
    Ok(out)
}

/// Brute-force expansion of prod_w (1 - e^{i(l-2w)theta} t)^{-C(l,w)} to O(t^{R+1}).
fn product_expansion(ell: u32, theta: f64, r_max: usize) -> Vec<f64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); r_max + 1];
    acc[0] = Complex64::new(1.0, 0.0);
    let mut mult = 1u64;
    for w in 0..=ell {
        let z = Complex64::from_polar(1.0, (ell as f64 - 2.0 * w as f64) * theta);
        for _ in 0..mult {
            // multiply by 1/(1 - z t)
            for r in 1..=r_max {
                let prev = acc[r - 1];
                acc[r] += z * prev;
            }
        }
        mult = mult * (ell - w) as u64 / (w + 1) as u64;
    }
    acc.iter().map(|c| c.re).collect()
}

/// Every check of the workbench, in a fixed order.
pub fn audit_checks(table: &EigenformTable, sieve: &SquarefreeSieve) -> Result<Vec<Check>> {
    let n = table.len().min(sieve.len());
    let mut out = Vec::new();

    for row in audit_table() {
        let name = format!("exponent_l{}", row.ell);
        let quoted = row.paper_quoted.as_ref().map(|q| q.to_string()).unwrap_or_default();
        let detail = format!("computed {}, quoted {quoted}", row.error_exponent);
        out.push(if row.matches {
            check(name, true, detail)
        } else {
            Check { name, status: Status::Warning, detail }
        });
    }
    let nonempty = [3u32, 5, 7, 9].iter().all(|&l| delta_range(l).is_ok());
    out.push(check("delta_ranges_nonempty", nonempty, "l in {3,5,7,9}".into()));

    let bad: Vec<u32> = (1..=20).filter(|&l| !verify_cheb_identity(l)).collect();
    out.push(check("chebyshev_identity", bad.is_empty(), format!("l = 1..20, failures: {bad:?}")));
    let literal: Vec<u32> = (1..=20).filter(|&l| verify_reversed_index_identity(l)).collect();
    out.push(Check {
        name: "reversed_index_reading".into(),
        status: Status::Warning,
        detail: format!("sum_j A_(l,j) T_(l-j) read literally holds only for l in {literal:?}"),
    });

    out.extend(table_checks(table, sieve)?);

    let fc_limit = n.min(10_000);
    let mut worst = 0.0f64;
    for &p in sieve.primes().iter().take_while(|&&p| p as usize <= fc_limit) {
        for ell in 1..=12 {
            worst = worst.max(fcrel_residual(ell, table, p)?.abs());
        }
    }
    out.push(check("prime_power_expansion", worst < 1e-8, format!("p <= {fc_limit}, l <= 12, max |residual| = {worst:e}")));

    let lf_limit = n.min(1000);
    let mut worst = 0.0f64;
    for &p in sieve.primes().iter().take_while(|&&p| p as usize <= lf_limit) {
        let theta = table.satake(p)?.theta;
        for ell in 1..=6 {
            let h = newton_h(&tensor_power_sums(ell, theta, 4), 4);
            let brute = product_expansion(ell, theta, 4);
            for r in 0..=4 {
                worst = worst.max((h[r] - brute[r]).abs());
            }
        }
    }
    out.push(check("newton_vs_product", worst < 1e-9, format!("p <= {lf_limit}, r <= 4, l <= 6, max diff = {worst:e}")));

    let conv_limit = n.min(10_000);
    for m in 1..=4u32 {
        let sym = sym_table(m, table, sieve, conv_limit)?;
        let mut worst = 0.0f64;
        for k in 1..=conv_limit {
            let mut rhs = 0.0;
            let mut d = 1usize;
            while d.pow(m) <= k {
                if k % d.pow(m) == 0 {
                    let e = k / d.pow(m);
                    // lambda(e^m) through the prime-power recursion, since e^m exceeds the table
                    rhs += sieve
                        .factorize(e)
                        .iter()
                        .map(|&(p, a)| lambda_prime_power(table.lambda(p as usize), m * a))
                        .product::<f64>();
                }
                d += 1;
            }
            worst = worst.max((sym[k] - rhs).abs());
        }
        let name = format!("sym{m}_convolution");
        let detail = format!("n <= {conv_limit}, max diff = {worst:e}");
        out.push(if worst < 1e-9 {
            check(name, true, detail)
        } else if m != 2 {
            // false as stated for m != 2: the zeta(ms) factor does not account for the sym^m factor
            Check { name, status: Status::Warning, detail }
        } else {
            check(name, false, detail)
        });
    }

    let dn = n.min(20_000);
    let mut bp = true;
    for ell in 1..=4 {
        for &p in sieve.primes().iter().take_while(|&&p| p <= 100) {
            bp &= correction_coeffs(ell, table, p, 4)?.b[1] == 0.0;
        }
        for path in [DecompositionPath::Squarefree, DecompositionPath::Squared] {
            let r = decomposition_residual(ell, path, table, sieve, Complex64::new(2.0, 0.0), dn, dn)?;
            out.push(check(
                format!("factorization_l{ell}_{}", if path == DecompositionPath::Squarefree { "squarefree" } else { "squared" }),
                r.within_bound(),
                format!("N = P = {dn}, s = 2, residual {:e} <= bound {:e}", r.residual, r.tail_bound),
            ));
        }
    }
    out.push(check("correction_vanishes_at_primes", bp, "B(p) = 0 for p <= 100, l <= 4".into()));

    let x = n.min(10_000);
    let mut worst = 0.0f64;
    for ell in 1..=4 {
        let a = full_sum(ell, table, sieve, x)?;
        let b = direct_full_sum(ell, table, sieve, x)?;
        worst = worst.max((a - b).abs() / (1.0 + b.abs()));
    }
    out.push(check("full_sum_split", worst < 1e-8, format!("X = {x}, l <= 4, max relative diff = {worst:e}")));

    Ok(out)
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.status != Status::Fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_expansion_for_one_parameter_pair() {
        // l = 1: 1/((1 - e^{it} x)(1 - e^{-it} x)) = sum U_r(cos t) x^r
        let theta = 0.9f64;
        let h = product_expansion(1, theta, 3);
        for (r, v) in h.iter().enumerate() {
            let want = ((r as f64 + 1.0) * theta).sin() / theta.sin();
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn small_table_audit_runs() {
        let t = EigenformTable::delta(3000).unwrap();
        let s = SquarefreeSieve::new(3000).unwrap();
        let checks = audit_checks(&t, &s).unwrap();
        assert!(all_pass(&checks), "{checks:#?}");
        let warnings = checks.iter().filter(|c| c.status == Status::Warning).count();
        assert_eq!(warnings, 2 + 1 + 3);
    }
}
