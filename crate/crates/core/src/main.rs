fn main() {
    std::process::exit(detmoments::cli::main_with_args(std::env::args_os().collect()));
}
