fn main() {
    std::process::exit(projpred::cli::run(std::env::args_os()));
}
