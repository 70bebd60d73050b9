use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(orlicz_umd::cli::main_with_args(std::env::args_os()))
}
