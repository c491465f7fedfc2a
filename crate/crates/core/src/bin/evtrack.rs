fn main() {
    std::process::exit(evtrack::cli::main());
}
