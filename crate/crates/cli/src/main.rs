fn main() {
    std::process::exit(oum_cli::run(std::env::args_os()));
}
