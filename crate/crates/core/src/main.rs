fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(ema_gnn::cli::run(argv));
}
