fn main() {
    std::process::exit(sim3_align::cli::run(std::env::args_os()));
}
