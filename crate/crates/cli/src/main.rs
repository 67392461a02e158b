fn main() {
    std::process::exit(lczmap_cli::run(std::env::args_os()));
}
