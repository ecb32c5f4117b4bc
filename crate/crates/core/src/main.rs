fn main() {
    std::process::exit(vem3d::cli::run(std::env::args_os()));
}
