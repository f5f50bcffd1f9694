use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(har::cli::main_with_args(std::env::args_os()))
}
