fn main() {
    std::process::exit(muboost_cli::run(std::env::args_os()));
}
