fn main() {
    std::process::exit(subgrad_cli::main_with_args(std::env::args_os()));
}
