//! `lsd`: generate detector error models, decode syndrome files and run
//! Monte-Carlo sweeps.
//!
//! Exit status is 0 on success, 1 for usage or input errors, 2 when a shot
//! cannot be decoded or a correction fails verification, and 3 for I/O
//! failures.

mod args;
mod commands;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

/// Splices the keys of a `sweep --config FILE` TOML table into the argument
/// list as flags placed before the user's own, so command-line values win.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(sub) = argv.iter().position(|a| a == "sweep") else {
        return Ok(argv);
    };
    let Some(flag) = argv[sub..].iter().position(|a| a == "--config").map(|i| i + sub) else {
        return Ok(argv);
    };
    let Some(path) = argv.get(flag + 1).map(PathBuf::from) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;

    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in table {
        let name = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &toml::Value| -> Result<String, CliError> {
            match v {
                toml::Value::String(s) => Ok(s.clone()),
                toml::Value::Integer(i) => Ok(i.to_string()),
                toml::Value::Float(f) => Ok(f.to_string()),
                other => Err(CliError::Usage(format!("{}: unsupported value for {key}: {other}", path.display()))),
            }
        };
        match &value {
            toml::Value::Boolean(true) => injected.push(name.into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                injected.push(name.into());
                injected.push(parts.join(",").into());
            }
            // The family is positional.
            v if key == "family" => injected.push(scalar(v)?.into()),
            v => {
                injected.push(name.into());
                injected.push(scalar(v)?.into());
            }
        }
    }
    let mut out: Vec<OsString> = argv[..=sub].to_vec();
    out.extend(injected);
    out.extend(argv[sub + 1..flag].iter().cloned());
    out.extend(argv[flag + 2..].iter().cloned());
    Ok(out)
}

fn run() -> Result<(), CliError> {
    let argv = expand_config(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Decode(a) => commands::decode(a),
        Command::Verify(a) => commands::verify(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Stats(a) => commands::stats(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lsd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
