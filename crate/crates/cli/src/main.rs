fn main() {
    std::process::exit(rankguard_cli::run(std::env::args_os()));
}
