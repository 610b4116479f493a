fn main() {
    std::process::exit(prespa::cli::run(std::env::args_os()));
}
