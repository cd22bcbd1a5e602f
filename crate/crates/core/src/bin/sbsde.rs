fn main() {
    std::process::exit(singular_bsde::cli::run_from(std::env::args_os()).status);
}
