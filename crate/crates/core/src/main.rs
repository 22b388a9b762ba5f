fn main() {
    std::process::exit(fracmart::cli::run(std::env::args_os()));
}
