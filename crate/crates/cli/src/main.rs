fn main() {
    std::process::exit(hierpin_cli::run_command(std::env::args_os()));
}
