fn main() {
    std::process::exit(manifold_l1::cli::run_from(std::env::args_os()));
}
