fn main() {
    std::process::exit(neckwall_cli::main_with_args(std::env::args_os()));
}
