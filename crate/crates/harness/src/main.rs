fn main() {
    std::process::exit(simest::cli::run_cli(std::env::args_os()));
}
