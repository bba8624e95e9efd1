//! Run configuration: flat `key = value` files, overridden key by key.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;

use crate::eigenform::{MAX_TABLE, SUPPORTED_WEIGHTS};
use crate::error::{LfoldError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub weight: u32,
    pub ell: Vec<u32>,
    pub s_grid: Vec<Complex64>,
    pub x_grid: Vec<usize>,
    pub delta: f64,
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 1_000_000,
            weight: 12,
            ell: vec![3],
            s_grid: vec![Complex64::new(2.0, 0.0)],
            x_grid: vec![100_000],
            delta: 0.3,
            out: PathBuf::from("."),
            cache: None,
            threads: None,
        }
    }
}

pub const KEYS: [&str; 9] = ["N", "weight", "ell", "s", "X", "delta", "out", "cache", "threads"];

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| LfoldError::Config(format!("line {}: expected key=value", i + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(LfoldError::Config(format!("line {}: unknown key '{k}'", i + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Integer that may be written in scientific notation (`1e6`, `2.5e5`).
pub fn parse_count(v: &str) -> Result<usize> {
    let v = v.trim().replace('_', "");
    if let Ok(n) = v.parse::<usize>() {
        return Ok(n);
    }
    let f: f64 = v.parse().map_err(|_| LfoldError::Config(format!("not a count: '{v}'")))?;
    if f < 0.0 || f.fract() != 0.0 || f > u64::MAX as f64 {
        return Err(LfoldError::Config(format!("not a count: '{v}'")));
    }
    Ok(f as usize)
}

/// `3`, `3,5,7` or the inclusive range `3..8`.
pub fn parse_ell_list(v: &str) -> Result<Vec<u32>> {
    let bad = || LfoldError::Config(format!("bad l list: '{v}'"));
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// `2`, `2.5`, `3+1i`, `3+i`, `3-2i`.
pub fn parse_complex(v: &str) -> Result<Complex64> {
    let bad = || LfoldError::Config(format!("bad s value: '{v}'"));
    let t = v.trim().replace(' ', "");
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(t.parse().map_err(|_| bad())?, 0.0));
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let pos = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(bad)?;
    let re: f64 = body[..pos].parse().map_err(|_| bad())?;
    let im_txt = &body[pos..];
    let im = match im_txt {
        "+" => 1.0,
        "-" => -1.0,
        _ => im_txt.parse().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re, im))
}

fn split_list<T>(v: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<T> = v.split(',').map(str::trim).filter(|p| !p.is_empty()).map(f).collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(LfoldError::Config(format!("empty list: '{v}'")));
    }
    Ok(items)
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "N" => self.n = parse_count(value)?,
            "weight" => {
                self.weight = value.trim().parse().map_err(|_| LfoldError::Config(format!("bad weight '{value}'")))?
            }
            "ell" => self.ell = parse_ell_list(value)?,
            "s" => self.s_grid = split_list(value, parse_complex)?,
            "X" => self.x_grid = split_list(value, parse_count)?,
            "delta" => {
                self.delta = value.trim().parse().map_err(|_| LfoldError::Config(format!("bad delta '{value}'")))?
            }
            "out" => self.out = PathBuf::from(value.trim()),
            "cache" => self.cache = Some(PathBuf::from(value.trim())),
            "threads" => self.threads = Some(parse_count(value)?),
            _ => return Err(LfoldError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies every pair of a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_pairs(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_TABLE {
            return Err(LfoldError::Config(format!("N must be in 1..={MAX_TABLE}, got {}", self.n)));
        }
        if !SUPPORTED_WEIGHTS.contains(&self.weight) {
            return Err(LfoldError::Config(format!("unsupported weight {}", self.weight)));
        }
        if self.ell.iter().any(|&l| l == 0) {
            return Err(LfoldError::Config("l values must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(LfoldError::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.x_grid.iter().any(|&x| x == 0) {
            return Err(LfoldError::Config("X values must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(LfoldError::Config("threads must be positive".into()));
        }
        Ok(())
    }
}
