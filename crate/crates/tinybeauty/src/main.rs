fn main() {
    std::process::exit(tinybeauty::cli::run(std::env::args_os()));
}
