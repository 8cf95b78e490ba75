fn main() {
    std::process::exit(fabre_cli::run_cli(std::env::args_os()));
}
