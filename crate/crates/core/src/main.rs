fn main() {
    std::process::exit(greenpath::cli::run(std::env::args_os()));
}
