fn main() {
    std::process::exit(mzqkd::cli::main_with_args(std::env::args_os()));
}
