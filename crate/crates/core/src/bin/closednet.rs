fn main() {
    let stdout = std::io::stdout();
    let code = closednet::cli::run(std::env::args(), &mut stdout.lock());
    std::process::exit(code);
}
