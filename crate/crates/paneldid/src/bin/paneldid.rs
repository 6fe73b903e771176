fn main() {
    std::process::exit(paneldid::cli::run());
}
