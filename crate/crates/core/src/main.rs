fn main() {
    std::process::exit(ssde::cli::main_with_args(std::env::args_os()));
}
