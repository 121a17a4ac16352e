fn main() {
    std::process::exit(themis::cli::main_with(std::env::args_os()));
}
