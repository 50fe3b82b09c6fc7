fn main() {
    std::process::exit(bcsdp::cli::main_with_args(std::env::args_os()));
}
