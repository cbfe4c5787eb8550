use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(wavestab_cli::app::execute(std::env::args_os()))
}
