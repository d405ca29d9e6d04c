use std::io::Write;

use idmft_cli::{parse_config, run, CliError};
use log::LevelFilter;

fn main() {
    let code = match parse_config(std::env::args_os()) {
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}\n\nRun `idmft --help` for usage.");
            e.exit_code()
        }
        Ok(cfg) => {
            let level = match cfg.verbosity {
                0 => LevelFilter::Warn,
                1 => LevelFilter::Info,
                2 => LevelFilter::Debug,
                _ => LevelFilter::Trace,
            };
            env_logger::Builder::new()
                .filter_level(level)
                .parse_default_env()
                .init();
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            let res = run(&cfg, &mut out);
            let _ = out.flush();
            match res {
                Ok(()) => 0,
                // downstream pager or `head` closed the pipe
                Err(CliError::File { source, .. })
                    if source.kind() == std::io::ErrorKind::BrokenPipe =>
                {
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
    };
    std::process::exit(code);
}
