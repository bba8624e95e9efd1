use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lfold_core::{LfoldError, Result, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "lfold", version, about = "Coefficients, l-fold product L-series and squarefree moment sums of level-one eigenforms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build or load the coefficient table, optionally running the consistency checks.
    Coeffs(Common),
    /// Chebyshev-basis expansion of lambda(p)^l and its exact identity check.
    Decompose(Common),
    /// Exact error exponents against the published table.
    Exponents {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Squarefree moment sums S_l, T_l and full sums on an X grid.
    Sums(Common),
    /// Sign changes in short windows [X, X + X^(1-delta)] and over [X, 2X].
    Signs(Common),
    /// Truncated L-series and factorization residuals.
    Lfun {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = PathChoice::Both)]
        path: PathChoice,
    },
    /// Fit S_l(X)/X by a polynomial in log X (even l).
    Fit(Common),
    /// Run every consistency check and emit one JSON verdict.
    Audit(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PathChoice {
    Squarefree,
    Squared,
    Both,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Flat key=value configuration file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Table size.
    #[arg(long = "N")]
    pub n: Option<String>,
    #[arg(long)]
    pub weight: Option<String>,
    /// l values: `3`, `3,5` or `3..8`.
    #[arg(long)]
    pub ell: Option<String>,
    /// Comma-separated X values.
    #[arg(long = "X")]
    pub x: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    /// Comma-separated s values such as `2,2.5,3+1i`.
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Coefficient cache file or directory (default: $LFOLD_CACHE).
    #[arg(long)]
    pub cache: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
    /// Run the consistency checks on the table.
    #[arg(long)]
    pub check: bool,
}

impl Common {
    /// Defaults, then the config file, then `LFOLD_CACHE` if no cache is set, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LfoldError::Config(format!("cannot read {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        if cfg.cache.is_none() && self.cache.is_none() {
            if let Some(env) = std::env::var_os("LFOLD_CACHE").filter(|v| !v.is_empty()) {
                cfg.cache = Some(PathBuf::from(env));
            }
        }
        let flags = [
            ("N", &self.n),
            ("weight", &self.weight),
            ("ell", &self.ell),
            ("X", &self.x),
            ("delta", &self.delta),
            ("s", &self.s),
            ("out", &self.out),
            ("cache", &self.cache),
            ("threads", &self.threads),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
