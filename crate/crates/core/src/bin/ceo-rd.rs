fn main() {
    std::process::exit(ceo_rd::cli::run(std::env::args_os()));
}
