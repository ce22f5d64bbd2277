fn main() {
    std::process::exit(topomode_cli::run_from_args(std::env::args_os()));
}
