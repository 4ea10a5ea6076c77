fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(tabrl::cli::cli_main(&args));
}
