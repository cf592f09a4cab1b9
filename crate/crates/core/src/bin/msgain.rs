fn main() {
    msgain::cli::configure_threads();
    std::process::exit(msgain::cli::run_from(std::env::args_os()));
}
