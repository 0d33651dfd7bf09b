fn main() {
    std::process::exit(causalmk::cli::run(std::env::args_os()));
}
