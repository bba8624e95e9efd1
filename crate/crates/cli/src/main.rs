use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use lfold_core::{Result, RunConfig};

mod args;
mod checks;
mod commands;

use args::{Cli, Command, Common};

fn setup(common: &Common) -> Result<RunConfig> {
    let cfg = common.resolve()?;
    if let Some(n) = cfg.threads {
        // fails only if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<commands::Artifact> {
    match cli.command {
        Command::Coeffs(c) => commands::coeffs(&setup(&c)?, c.check),
        Command::Decompose(c) => commands::decompose(&setup(&c)?),
        Command::Exponents { common, format } => commands::exponents(&setup(&common)?, format),
        Command::Sums(c) => commands::sums(&setup(&c)?),
        Command::Signs(c) => commands::signs(&setup(&c)?),
        Command::Lfun { common, path } => commands::lfun(&setup(&common)?, path),
        Command::Fit(c) => commands::fit(&setup(&c)?),
        Command::Audit(c) => commands::audit(&setup(&c)?),
    }
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({
        "schema_version": commands::SCHEMA_VERSION,
        "error": { "kind": kind, "message": message },
    })
    .to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            println!("{}", error_json("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(artifact) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(artifact.contents.as_bytes());
            eprintln!("wrote {}", artifact.file.display());
            if artifact.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            println!("{}", error_json(e.kind(), &e.to_string()));
            ExitCode::from(2)
        }
    }
}
