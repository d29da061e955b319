fn main() {
    std::process::exit(mlc::cli::main_with_args(std::env::args_os()));
}
