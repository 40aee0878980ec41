fn main() {
    std::process::exit(flsa::cli::run(std::env::args_os()));
}
