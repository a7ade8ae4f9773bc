fn main() {
    std::process::exit(lrmar::cli::run(std::env::args_os()));
}
