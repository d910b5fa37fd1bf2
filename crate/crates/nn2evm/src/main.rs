fn main() {
    std::process::exit(nn2evm::cli::run(std::env::args()));
}
