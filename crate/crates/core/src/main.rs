fn main() {
    std::process::exit(architext::cli::run(std::env::args_os()));
}
