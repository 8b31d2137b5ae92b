fn main() {
    std::process::exit(specseg::cli::main_with_args(std::env::args_os()));
}
