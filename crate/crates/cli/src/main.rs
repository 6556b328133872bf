use std::io::IsTerminal;

use tracing_subscriber::EnvFilter;

fn main() {
    let mut stdout = std::io::stdout();
    let cli = match gabm_cli::parse_args(std::env::args_os(), &mut stdout) {
        Ok(cli) => cli,
        Err(code) => std::process::exit(code),
    };
    let filter =
        EnvFilter::try_from_env("GABM_LOG").unwrap_or_else(|_| EnvFilter::new(gabm_cli::log_filter(cli.verbose)));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    std::process::exit(gabm_cli::run(cli, &mut stdout));
}
