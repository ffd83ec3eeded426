fn main() {
    std::process::exit(chflow::cli::cli_main(std::env::args_os()));
}
