fn main() {
    std::process::exit(rssiloc::cli::run(std::env::args_os()));
}
