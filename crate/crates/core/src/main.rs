fn main() {
    std::process::exit(corridor::exp::cli::run(std::env::args_os()));
}
