fn main() {
    std::process::exit(placer_cli::run(std::env::args_os()));
}
