fn main() {
    std::process::exit(dg_core::cli::run(std::env::args_os()));
}
