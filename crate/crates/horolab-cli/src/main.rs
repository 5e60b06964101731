fn main() {
    std::process::exit(horolab_cli::main_with_args(std::env::args_os()));
}
