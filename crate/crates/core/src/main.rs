fn main() {
    std::process::exit(shadow_coupling::cli::run(std::env::args_os()));
}
