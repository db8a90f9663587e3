fn main() {
    let code = bm_extension::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
