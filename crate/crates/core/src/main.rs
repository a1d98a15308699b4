fn main() {
    std::process::exit(mcqgen::bankserve::cli::run(std::env::args_os()));
}
