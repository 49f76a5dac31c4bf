fn main() {
    std::process::exit(infoval::cli::main_with_args(std::env::args_os()));
}
