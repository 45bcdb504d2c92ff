fn main() {
    std::process::exit(semivol::cli::main_entry());
}
