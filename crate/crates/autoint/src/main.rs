fn main() {
    std::process::exit(autoint::cli::run());
}
