fn main() {
    dse::cli::init_logging();
    std::process::exit(dse::cli::run(std::env::args_os()));
}
