use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use nhbose_cli::config::{read_config_file, OUT_DIR_ENV};
use nhbose_cli::{run, Cli, CliError, RunConfig};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("{}", Cli::command().render_usage());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => read_config_file(p)?,
        None => Default::default(),
    };
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(std::path::PathBuf::from);
    let cfg = RunConfig::resolve(&cli.flag_map(), &file, out_dir.as_deref())?;
    run(&cfg)?;
    if cfg.out.as_os_str() != "-" {
        println!("{}", cfg.out.display());
    }
    Ok(())
}
