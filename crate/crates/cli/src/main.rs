fn main() {
    std::process::exit(thinfilm_cli::main_with(std::env::args_os()));
}
