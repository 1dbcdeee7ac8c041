fn main() {
    std::process::exit(specdos::cli::main_entry());
}
