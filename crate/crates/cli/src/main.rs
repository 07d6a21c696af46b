fn main() {
    std::process::exit(kropina_cli::run(std::env::args_os()));
}
