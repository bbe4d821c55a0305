fn main() {
    std::process::exit(msid::cli::run_cli(std::env::args_os()));
}
