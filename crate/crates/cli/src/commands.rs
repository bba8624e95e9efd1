//! One function per subcommand. Each returns the artifact it wrote, so
//! `main` can echo it and pick the exit status.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lfold_core::dirichlet::{decomposition_residual_with, factor_tables, l_ell_truncated, DecompositionPath};
use lfold_core::eigenform::{load_or_build_delta, read_cache, CacheFile};
use lfold_core::exponents::{report, ExponentReport};
use lfold_core::moments::{
    count_sign_changes, default_grid_ratio, fit_main_term, geometric_grid, moment_sums, window_sign_scan, FitResult,
};
use lfold_core::sym::verify_cheb_identity;
use lfold_core::{ChebyshevExpansion, EigenformTable, LfoldError, Result, RunConfig, SquarefreeSieve};
use serde::Serialize;

use crate::args::{Format, PathChoice};
use crate::checks::{all_pass, audit_checks, table_checks, Check};

pub const SCHEMA_VERSION: u32 = 1;

pub struct Artifact {
    pub file: PathBuf,
    pub contents: String,
    /// False when a check failed; the file is still written.
    pub ok: bool,
}

fn emit(cfg: &RunConfig, name: &str, contents: String, ok: bool) -> Result<Artifact> {
    std::fs::create_dir_all(&cfg.out)?;
    let file = cfg.out.join(name);
    let tmp = cfg.out.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, &contents)?;
    std::fs::rename(&tmp, &file)?;
    Ok(Artifact { file, contents, ok })
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

const CSV_SCHEMA_LINE: &str = "# schema_version=1\n";

/// Cache file for a weight: the path itself, or a per-weight file inside a directory.
pub fn cache_file(path: &Path, weight: u32) -> PathBuf {
    if path.is_dir() || path.as_os_str().to_string_lossy().ends_with('/') {
        path.join(format!("lfold-k{weight}.coeffs"))
    } else {
        path.to_path_buf()
    }
}

pub fn load_table(cfg: &RunConfig) -> Result<(EigenformTable, SquarefreeSieve)> {
    let table = match (cfg.weight, &cfg.cache) {
        (12, Some(path)) => load_or_build_delta(&cache_file(path, 12), cfg.n)?,
        (12, None) => EigenformTable::delta(cfg.n)?,
        (k, Some(path)) => {
            let path = cache_file(path, k);
            let file = read_cache(std::io::BufReader::new(std::fs::File::open(&path)?))?;
            if file.weight != k {
                return Err(LfoldError::Config(format!("{} holds weight {}, not {k}", path.display(), file.weight)));
            }
            if file.n_max < cfg.n {
                return Err(LfoldError::ResourceLimit { requested: cfg.n, max: file.n_max });
            }
            let entries = file.entries.into_iter().filter(|(n, _)| *n as usize <= cfg.n).collect();
            CacheFile { weight: k, n_max: cfg.n, entries }.into_table()?
        }
        (k, None) => {
            return Err(LfoldError::Config(format!(
                "weight {k} needs a coefficient file (--cache) listing at least a(p) for primes p <= N"
            )))
        }
    };
    let sieve = SquarefreeSieve::new(cfg.n)?;
    Ok((table, sieve))
}

#[derive(Serialize)]
struct CoeffsReport<'a> {
    schema_version: u32,
    weight: u32,
    #[serde(rename = "N")]
    n: usize,
    cache: Option<String>,
    /// a(1), ..., a(10) as decimal strings.
    first_coefficients: Vec<String>,
    checks: &'a [Check],
}

pub fn coeffs(cfg: &RunConfig, check: bool) -> Result<Artifact> {
    let (table, sieve) = load_table(cfg)?;
    let checks = if check { table_checks(&table, &sieve)? } else { Vec::new() };
    let first = match table.exact() {
        Some(a) => a.iter().skip(1).take(10).map(|v| v.to_string()).collect(),
        None => Vec::new(),
    };
    let rep = CoeffsReport {
        schema_version: SCHEMA_VERSION,
        weight: cfg.weight,
        n: cfg.n,
        cache: cfg.cache.as_ref().map(|p| cache_file(p, cfg.weight).display().to_string()),
        first_coefficients: first,
        checks: &checks,
    };
    emit(cfg, "coeffs.json", json(&rep), all_pass(&checks))
}

#[derive(Serialize)]
struct DecomposeRow {
    ell: u32,
    /// (n, l - 2n, C(l,n) - C(l,n-1)) with the coefficient as a decimal string.
    terms: Vec<(u32, u32, String)>,
    identity: &'static str,
}

pub fn decompose(cfg: &RunConfig) -> Result<Artifact> {
    let mut rows = Vec::new();
    for &ell in &cfg.ell {
        let exp = ChebyshevExpansion::new(ell)?;
        let terms = exp.terms().map(|(m, c)| ((ell - m) / 2, m, c.to_string())).collect();
        let identity = if verify_cheb_identity(ell) { "OK" } else { "FAILED" };
        rows.push(DecomposeRow { ell, terms, identity });
    }
    let ok = rows.iter().all(|r| r.identity == "OK");
    emit(cfg, "decompose.json", json(&serde_json::json!({ "schema_version": SCHEMA_VERSION, "rows": rows })), ok)
}

fn exponent_rows(cfg: &RunConfig) -> Result<Vec<ExponentReport>> {
    cfg.ell.iter().map(|&l| report(l)).collect()
}

pub fn exponents(cfg: &RunConfig, format: Format) -> Result<Artifact> {
    let rows = exponent_rows(cfg)?;
    match format {
        Format::Json => emit(
            cfg,
            "exponents.json",
            json(&serde_json::json!({ "schema_version": SCHEMA_VERSION, "rows": rows })),
            true,
        ),
        Format::Csv => {
            let mut s = String::from(CSV_SCHEMA_LINE);
            s.push_str("ell,kind,num,den,error_exponent,paper_quoted,match\n");
            for r in &rows {
                let quoted = r.paper_quoted.as_ref().map(|q| q.to_string()).unwrap_or_default();
                writeln!(s, "{},{},{},{},{},{},{}", r.ell, r.kind, r.value.numer(), r.value.denom(), r.error_exponent, quoted, r.matches)
                    .expect("write to string");
            }
            emit(cfg, "exponents.csv", s, true)
        }
    }
}

/// The X grid: the listed values, or a geometric grid from 10 up to a single X.
fn sums_grid(cfg: &RunConfig) -> Result<Vec<usize>> {
    let mut xs = cfg.x_grid.clone();
    xs.sort_unstable();
    xs.dedup();
    if xs.len() == 1 {
        return geometric_grid(xs[0].min(10), xs[0], default_grid_ratio());
    }
    Ok(xs)
}

pub fn sums(cfg: &RunConfig) -> Result<Artifact> {
    let (table, sieve) = load_table(cfg)?;
    let grid = sums_grid(cfg)?;
    let mut s = String::from(CSV_SCHEMA_LINE);
    s.push_str("ell,X,S,T,A\n");
    for &ell in &cfg.ell {
        let m = moment_sums(ell, &table, &sieve, &grid, true)?;
        let a = m.a.as_ref().expect("requested");
        for i in 0..grid.len() {
            writeln!(s, "{},{},{:e},{:e},{:e}", ell, grid[i], m.s[i], m.t[i], a[i]).expect("write to string");
        }
    }
    emit(cfg, "sums.csv", s, true)
}

pub fn signs(cfg: &RunConfig) -> Result<Artifact> {
    let (table, sieve) = load_table(cfg)?;
    let mut s = String::from(CSV_SCHEMA_LINE);
    s.push_str("ell,X,delta,window_lo,window_hi,count,first_pair\n");
    let pair = |p: Option<&(usize, usize)>| p.map(|(a, b)| format!("{a}:{b}")).unwrap_or_default();
    for &ell in &cfg.ell {
        for &x in &cfg.x_grid {
            let w = window_sign_scan(ell, &table, &sieve, x, cfg.delta)?;
            if w.delta_in_range == Some(false) {
                eprintln!("warning: delta = {} is outside the admissible range for l = {ell}", cfg.delta);
            }
            if w.all_zero {
                eprintln!("warning: every value in [{}, {}] is zero", w.window_lo, w.window_hi);
            }
            writeln!(s, "{},{},{},{},{},{},{}", ell, x, cfg.delta, w.window_lo, w.window_hi, w.count, pair(w.pairs.first()))
                .expect("write to string");
            // the dyadic range [X, 2X] has an empty delta column
            if 2 * x <= table.len().min(sieve.len()) {
                let d = count_sign_changes(ell, &table, &sieve, x)?;
                writeln!(s, "{},{},,{},{},{},{}", ell, x, d.window_lo, d.window_hi, d.count, pair(d.pairs.first()))
                    .expect("write to string");
            }
        }
    }
    emit(cfg, "signs.csv", s, true)
}

#[derive(Serialize)]
struct LfunRow {
    ell: u32,
    path: DecompositionPath,
    s: [f64; 2],
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "P")]
    p: usize,
    value: [f64; 2],
    product_value: [f64; 2],
    euler_product: [f64; 2],
    tail_bound: f64,
    residual: f64,
    within_bound: bool,
}

pub fn lfun(cfg: &RunConfig, choice: PathChoice) -> Result<Artifact> {
    let (table, sieve) = load_table(cfg)?;
    let paths: &[DecompositionPath] = match choice {
        PathChoice::Squarefree => &[DecompositionPath::Squarefree],
        PathChoice::Squared => &[DecompositionPath::Squared],
        PathChoice::Both => &[DecompositionPath::Squarefree, DecompositionPath::Squared],
    };
    let n = cfg.n;
    let mut rows = Vec::new();
    for &ell in &cfg.ell {
        for &path in paths {
            let power = path.power(ell);
            let tables = factor_tables(power, &table, &sieve, n, n)?;
            for &s in &cfg.s_grid {
                let r = decomposition_residual_with(&tables, ell, path, &table, &sieve, s, n, n)?;
                let e = l_ell_truncated(power, &table, &sieve, s, n)?;
                rows.push(LfunRow {
                    ell,
                    path,
                    s: r.s,
                    n,
                    p: n,
                    value: [r.value.re, r.value.im],
                    product_value: [r.product_value.re, r.product_value.im],
                    euler_product: [e.value.re, e.value.im],
                    tail_bound: r.tail_bound,
                    residual: r.residual,
                    within_bound: r.within_bound(),
                });
            }
        }
    }
    let ok = rows.iter().all(|r| r.within_bound);
    emit(cfg, "lfun.json", json(&serde_json::json!({ "schema_version": SCHEMA_VERSION, "evaluations": rows })), ok)
}

/// Fitting grid: geometric between the smallest and largest X, or X/100..X for a single value.
fn fit_grid(cfg: &RunConfig) -> Result<Vec<usize>> {
    let lo = *cfg.x_grid.iter().min().expect("validated nonempty");
    let hi = *cfg.x_grid.iter().max().expect("validated nonempty");
    let lo = if lo == hi { (hi / 100).max(1) } else { lo };
    geometric_grid(lo, hi, default_grid_ratio())
}

pub fn fit(cfg: &RunConfig) -> Result<Artifact> {
    let (table, sieve) = load_table(cfg)?;
    let grid = fit_grid(cfg)?;
    let fits: Vec<FitResult> = cfg
        .ell
        .iter()
        .map(|&ell| fit_main_term(&moment_sums(ell, &table, &sieve, &grid, false)?))
        .collect::<Result<_>>()?;
    let doc = if let [one] = fits.as_slice() {
        serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "ell": one.ell,
            "degree": one.degree,
            "coefficients": one.coefficients,
            "residual_exponent": one.residual_exponent,
            "r2": one.r2,
            "grid": grid,
        })
    } else {
        serde_json::json!({ "schema_version": SCHEMA_VERSION, "grid": grid, "fits": fits })
    };
    emit(cfg, "fit.json", json(&doc), true)
}

pub fn audit(cfg: &RunConfig) -> Result<Artifact> {
    let (table, sieve) = load_table(cfg)?;
    let checks = audit_checks(&table, &sieve)?;
    let ok = all_pass(&checks);
    let count = |st| checks.iter().filter(|c| c.status == st).count();
    let doc = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "weight": cfg.weight,
        "N": cfg.n,
        "verdict": if ok { "pass" } else { "fail" },
        "passed": count(crate::checks::Status::Pass),
        "failed": count(crate::checks::Status::Fail),
        "warnings": count(crate::checks::Status::Warning),
        "checks": checks,
    });
    emit(cfg, "audit.json", json(&doc), ok)
}
