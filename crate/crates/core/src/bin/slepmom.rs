fn main() {
    std::process::exit(slepian_moments::cli::run(std::env::args_os()));
}
