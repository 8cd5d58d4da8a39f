fn main() {
    if let Err(e) = circuitsim::cli::entry() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
