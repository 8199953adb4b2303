fn main() {
    std::process::exit(coupled_moment::cli::run(std::env::args_os()));
}
