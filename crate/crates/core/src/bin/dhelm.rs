fn main() {
    std::process::exit(dhelm::cli::run(std::env::args_os()));
}
