fn main() {
    std::process::exit(gnomon::cli::run(std::env::args_os()));
}
