fn main() {
    std::process::exit(htoda::cli::run(std::env::args_os()));
}
