use clap::Parser;

fn main() {
    let argv: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let verbose = pivotforge_cli::Cli::try_parse_from(&argv).map_or(0, |c| c.verbose);
    pivotforge_cli::init_logging(verbose);
    let stdout = std::io::stdout();
    let code = pivotforge_cli::run(argv, &mut stdout.lock());
    std::process::exit(code);
}
