fn main() {
    std::process::exit(redcut::cli::main());
}
