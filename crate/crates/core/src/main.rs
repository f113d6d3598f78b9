fn main() {
    std::process::exit(scgalab::cli::main_with_args(std::env::args_os()));
}
