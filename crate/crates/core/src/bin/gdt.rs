fn main() {
    gdtree::cli::init_logging();
    std::process::exit(gdtree::cli::run(std::env::args_os()));
}
