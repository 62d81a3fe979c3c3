fn main() {
    std::process::exit(spectral_sdp_cli::main_with_args(std::env::args_os()));
}
