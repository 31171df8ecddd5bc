fn main() {
    std::process::exit(drugnet::cli::run_command(std::env::args_os()));
}
