fn main() -> std::process::ExitCode {
    calibkit::cli::main_with_args(std::env::args_os())
}
