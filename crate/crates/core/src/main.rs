fn main() {
    std::process::exit(rpkit::cli::run(std::env::args_os()));
}
