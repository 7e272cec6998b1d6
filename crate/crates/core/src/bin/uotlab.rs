fn main() {
    std::process::exit(uotlab::harness::cli::run(std::env::args_os()));
}
