fn main() {
    std::process::exit(laminate_bloch::cli::main_with_args(std::env::args_os()));
}
