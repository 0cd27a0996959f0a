fn main() {
    std::process::exit(pinching_crlb::cli::run_command(std::env::args_os().skip(1)));
}
