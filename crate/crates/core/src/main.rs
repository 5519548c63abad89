fn main() {
    std::process::exit(cavcool::cli::run(std::env::args_os()));
}
