fn main() {
    std::process::exit(bilinear_lab::cli::main_with_args(std::env::args_os()));
}
