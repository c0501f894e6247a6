fn main() {
    std::process::exit(dcner::cli::run(std::env::args_os()));
}
