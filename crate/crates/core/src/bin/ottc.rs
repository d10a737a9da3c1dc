fn main() {
    std::process::exit(ottc::cli::run(std::env::args_os()));
}
