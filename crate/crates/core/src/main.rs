use std::io;

fn main() {
    // Logging level is fixed; the tool reads no environment variables.
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    let code = xlperm::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
