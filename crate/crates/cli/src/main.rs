fn main() {
    std::process::exit(specband_cli::run_cli(std::env::args_os()));
}
