fn main() {
    std::process::exit(predlqr::cli::run(std::env::args().skip(1)));
}
