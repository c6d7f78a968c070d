fn main() {
    std::process::exit(phytosim::cli::run(std::env::args_os()));
}
