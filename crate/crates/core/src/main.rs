fn main() {
    std::process::exit(l2t_core::cli::run(std::env::args_os()));
}
