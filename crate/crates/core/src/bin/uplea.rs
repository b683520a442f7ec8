fn main() {
    if let Err(e) = uplea::cli::run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
