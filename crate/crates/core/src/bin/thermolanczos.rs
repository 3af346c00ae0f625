fn main() {
    std::process::exit(thermolanczos::cli::main_with_args(std::env::args_os()));
}
