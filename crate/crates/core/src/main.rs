fn main() {
    std::process::exit(hdfactor::cli::run(std::env::args_os()));
}
