fn main() {
    std::process::exit(coclust::cli::run(std::env::args_os()));
}
