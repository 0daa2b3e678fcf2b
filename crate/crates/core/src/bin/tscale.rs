fn main() {
    std::process::exit(tscale::cli::run(std::env::args_os()));
}
