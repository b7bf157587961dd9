mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

use config::{flag_name, key_table, Config, KEYS};
use error::CliError;

fn subcommand(name: &'static str, about: &'static str) -> Command {
    let mut cmd = Command::new(name)
        .about(about)
        .after_help(key_table())
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("Read `key = value` lines from FILE; flags override it"),
        )
        .arg(
            Arg::new("no-noise")
                .long("no-noise")
                .action(ArgAction::SetTrue)
                .help("Disable EMI noise (same as --noise false)"),
        );
    // Every key is also a flag; they are listed in the table below the usage.
    for key in KEYS {
        cmd = cmd.arg(
            Arg::new(key.name)
                .long(flag_name(key.name))
                .value_name("VALUE")
                .hide(true),
        );
    }
    cmd
}

fn cli() -> Command {
    let mut cmd = Command::new("spikeid")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Physics-informed passive-component identification for a buck converter")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .after_help(format!(
            "The output root defaults to ${} or ./spikeid-out; each subcommand writes into <root>/<subcommand> unless --out is given.",
            config::OUT_ENV
        ));
    for (name, about) in commands::SUBCOMMANDS {
        cmd = cmd.subcommand(subcommand(name, about));
    }
    cmd
}

/// Defaults, then the config file, then flags.
fn resolve(m: &ArgMatches) -> Result<Config, CliError> {
    let mut cfg = Config::default();
    if let Some(path) = m.get_one::<PathBuf>("config") {
        cfg.apply_file(path)?;
    }
    for key in KEYS {
        if let Some(v) = m.get_one::<String>(key.name) {
            cfg.set(key.name, v)?;
        }
    }
    if m.get_flag("no-noise") {
        cfg.set("noise", "false")?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let result = resolve(sub).and_then(|cfg| commands::run(name, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
