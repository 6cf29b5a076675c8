mod cli;

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "ecoschool=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    std::process::exit(cli::main());
}
