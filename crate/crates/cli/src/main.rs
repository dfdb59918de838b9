fn main() {
    std::process::exit(roadcache_cli::run_cli(std::env::args_os()));
}
