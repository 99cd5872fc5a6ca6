fn main() {
    std::process::exit(ajscc::cli::main_with_args(std::env::args_os()));
}
