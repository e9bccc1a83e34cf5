fn main() {
    std::process::exit(polylangevin::cli::main());
}
