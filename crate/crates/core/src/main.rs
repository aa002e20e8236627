fn main() {
    std::process::exit(ilsi::cli::main_with_args(std::env::args_os()));
}
