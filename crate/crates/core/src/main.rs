fn main() {
    std::process::exit(datefruit::cli::main());
}
