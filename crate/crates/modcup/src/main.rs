fn main() {
    std::process::exit(modcup::cli::run());
}
