fn main() {
    if let Err(e) = rhlab::cli::init_threads() {
        eprintln!("rhlab: {e}");
        std::process::exit(rhlab::cli::EXIT_USAGE);
    }
    std::process::exit(rhlab::cli::run(std::env::args_os()));
}
