fn main() {
    std::process::exit(linear_td::cli::main_with_args(std::env::args_os()));
}
