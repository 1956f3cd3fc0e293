fn main() {
    std::process::exit(synclab::cli::run(std::env::args_os()));
}
