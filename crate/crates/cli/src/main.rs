fn main() {
    std::process::exit(brwcrit_cli::run(std::env::args_os()));
}
