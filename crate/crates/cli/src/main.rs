use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(ptq_cli::run(std::env::args_os()))
}
