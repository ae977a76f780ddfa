fn main() {
    std::process::exit(wyckoff::cli::main_entry());
}
