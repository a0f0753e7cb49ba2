fn main() {
    std::process::exit(ami_mortality::cli::main_with_args(std::env::args_os()));
}
