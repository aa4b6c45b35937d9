fn main() {
    std::process::exit(wave_mvsvm::cli::run(std::env::args_os()));
}
