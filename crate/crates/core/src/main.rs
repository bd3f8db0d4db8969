fn main() {
    std::process::exit(chdm::cli::main_with_args(std::env::args_os()));
}
