fn main() {
    std::process::exit(bcclace_cli::main_with(std::env::args_os().collect()));
}
