fn main() {
    std::process::exit(swarmfuzz::cli::run());
}
