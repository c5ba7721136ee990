fn main() {
    std::process::exit(finsler_core::cli::run_command(std::env::args_os()));
}
