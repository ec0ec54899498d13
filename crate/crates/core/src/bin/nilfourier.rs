fn main() {
    std::process::exit(nilfourier::cli::run(std::env::args_os()));
}
