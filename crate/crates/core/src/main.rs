fn main() {
    std::process::exit(poissonization::cli::main_with_args(std::env::args_os()));
}
