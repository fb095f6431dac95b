fn main() {
    std::process::exit(specsim::cli::run(std::env::args_os()));
}
