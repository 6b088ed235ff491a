fn main() {
    std::process::exit(semicocycle::cli::main_with_args(std::env::args_os()));
}
