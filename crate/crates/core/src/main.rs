fn main() {
    env_logger::init();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = layercut::cli::run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
