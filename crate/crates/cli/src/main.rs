fn main() {
    std::process::exit(renyi_cli::run(std::env::args_os()));
}
