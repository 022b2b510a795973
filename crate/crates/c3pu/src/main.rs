fn main() {
    std::process::exit(c3pu::cli::run());
}
