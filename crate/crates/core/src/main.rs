fn main() {
    std::process::exit(rotorbit::cli::main_with_args(std::env::args_os()));
}
