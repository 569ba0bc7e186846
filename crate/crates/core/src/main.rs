fn main() {
    std::process::exit(fadecap::cli::run(std::env::args_os()));
}
