fn main() {
    std::process::exit(dphc::cli::run());
}
