fn main() {
    std::process::exit(impact_game::cli::main_with_args(std::env::args_os()));
}
