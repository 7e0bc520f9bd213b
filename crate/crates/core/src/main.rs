fn main() {
    std::process::exit(gjsoq::cli::run(std::env::args_os()));
}
