fn main() {
    std::process::exit(subspace_sdp::cli::run(std::env::args_os()));
}
