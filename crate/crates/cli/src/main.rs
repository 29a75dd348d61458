fn main() {
    std::process::exit(prost_cli::run(std::env::args_os()));
}
