fn main() {
    std::process::exit(creadet::cli::run(std::env::args_os()));
}
