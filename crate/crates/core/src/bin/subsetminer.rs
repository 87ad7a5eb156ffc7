fn main() {
    std::process::exit(subsetminer::cli::run(std::env::args_os()));
}
