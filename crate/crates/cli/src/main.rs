fn main() {
    std::process::exit(gsmote_cli::run(std::env::args_os()));
}
