fn main() {
    std::process::exit(acpclass::cli::main());
}
