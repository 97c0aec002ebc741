fn main() {
    std::process::exit(selfreg_cli::main_with_args(std::env::args_os()));
}
