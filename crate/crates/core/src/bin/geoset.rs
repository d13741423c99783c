fn main() -> std::process::ExitCode {
    geoset::cli::main_with_args(std::env::args_os())
}
