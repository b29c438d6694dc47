use clap::Parser;
use isext_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // usage errors are input errors; exit code 2 means no solver
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            std::process::exit(1);
        }
        Err(e) => e.exit(),
    };
    let mut stdout = std::io::stdout().lock();
    let code = match run(&cli, &mut stdout) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("isext: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
