fn main() {
    std::process::exit(concentric_pc::cli::main());
}
