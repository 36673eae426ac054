fn main() {
    std::process::exit(funk::cli::main(std::env::args_os()));
}
