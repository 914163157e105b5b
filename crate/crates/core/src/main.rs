fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let code = sirgold::scenario_io::run_cli(&argv, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
