fn main() {
    env_logger::init();
    std::process::exit(advlogo::cli::main_with_args(std::env::args().collect()));
}
