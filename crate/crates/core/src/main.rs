fn main() {
    std::process::exit(linkstat::cli::main_with_args(std::env::args_os()));
}
