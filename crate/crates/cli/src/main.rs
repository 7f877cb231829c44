fn main() -> std::process::ExitCode {
    esc_cli::main_with_args(std::env::args_os())
}
