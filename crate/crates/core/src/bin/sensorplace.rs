fn main() {
    std::process::exit(sensorplace::cli::run(std::env::args_os()));
}
