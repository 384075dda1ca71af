fn main() {
    std::process::exit(qpdg::cli::run(std::env::args_os()));
}
