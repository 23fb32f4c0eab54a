fn main() {
    std::process::exit(contigsieve::cli::run_from_args(std::env::args_os()));
}
