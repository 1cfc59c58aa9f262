fn main() {
    std::process::exit(regime_surrogate::cli::main_with_args(std::env::args_os()));
}
