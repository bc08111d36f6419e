fn main() {
    std::process::exit(foxh_kit::cli::run(std::env::args_os()));
}
