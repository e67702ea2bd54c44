fn main() {
    std::process::exit(loggas::cli::dispatch(std::env::args_os()));
}
