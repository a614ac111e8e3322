fn main() {
    std::process::exit(pgmerge::cli::run(std::env::args_os()));
}
