fn main() {
    let code = oscint::cli::run(std::env::args_os());
    std::process::exit(code);
}
