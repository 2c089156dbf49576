fn main() {
    std::process::exit(djf::cli::run(std::env::args_os()));
}
