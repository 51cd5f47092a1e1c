fn main() {
    std::process::exit(ballwalk::cli::run(std::env::args_os()));
}
