fn main() {
    std::process::exit(diovqa::cli::run(std::env::args_os()));
}
