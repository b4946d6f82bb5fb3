fn main() {
    std::process::exit(vpwf::cli::run(std::env::args_os()));
}
