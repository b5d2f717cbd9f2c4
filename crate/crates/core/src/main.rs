fn main() {
    std::process::exit(mcph::cli::main_with_args(std::env::args_os()));
}
