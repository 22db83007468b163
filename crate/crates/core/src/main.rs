fn main() {
    std::process::exit(uavcov::cli::main_entry());
}
