fn main() {
    std::process::exit(squeezent::cli::run_from_args(std::env::args_os()));
}
