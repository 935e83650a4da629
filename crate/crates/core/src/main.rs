fn main() {
    std::process::exit(chaoskit::cli::main_with(std::env::args_os()));
}
