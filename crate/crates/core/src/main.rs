fn main() {
    std::process::exit(stiefel_norm::cli::run_from_env());
}
