fn main() {
    std::process::exit(bers::cli::run(std::env::args_os()));
}
