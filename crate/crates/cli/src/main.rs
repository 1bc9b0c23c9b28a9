fn main() {
    std::process::exit(idslab_cli::run(std::env::args_os()));
}
