fn main() {
    std::process::exit(condgrad::cli::main());
}
