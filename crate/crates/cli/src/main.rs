mod config;
mod error;
mod experiments;
mod table;

use clap::Parser;

use config::{Args, Config};
use error::{CliError, Result};

fn run(args: Args) -> Result<()> {
    let cfg = Config::resolve(args)?;
    log::info!(
        "{:?}: T = {}, dt = {}, delta = {}, parallel = {}",
        cfg.experiment,
        cfg.t_final,
        cfg.dt,
        cfg.delta,
        hum_spectral::par::is_parallel()
    );
    let outcome = experiments::run(&cfg)?;
    for table in &outcome.tables {
        let path = table.write(&cfg.out_dir, cfg.format)?;
        // per-order control series are long; only summarise them
        if table.rows.len() <= 64 {
            println!("{}\n{}\n", path.display(), table.render());
        } else {
            println!("{} ({} rows)\n", path.display(), table.rows.len());
        }
    }
    match outcome.unconverged {
        0 => Ok(()),
        k => Err(CliError::Unconverged(k)),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Args::parse()) {
        eprintln!("humctl: {e}");
        std::process::exit(e.exit_code());
    }
}
