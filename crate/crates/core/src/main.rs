fn main() {
    std::process::exit(nullframe_core::cli::run(std::env::args_os()));
}
