fn main() {
    proofgraph::cli::init_logging();
    std::process::exit(proofgraph::cli::run(std::env::args_os()));
}
