fn main() {
    std::process::exit(uclso_cli::run(std::env::args_os()));
}
