fn main() {
    std::process::exit(sqfa::cli::main_entry());
}
