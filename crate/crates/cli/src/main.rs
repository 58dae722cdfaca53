fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(heursched_cli::dispatch(&argv));
}
