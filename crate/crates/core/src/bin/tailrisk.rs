fn main() {
    std::process::exit(tailrisk::cli::cli_dispatch(std::env::args_os()));
}
