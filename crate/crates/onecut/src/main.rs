fn main() {
    std::process::exit(onecut::cli::main());
}
