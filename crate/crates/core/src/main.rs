use std::process::ExitCode;

fn main() -> ExitCode {
    let code = lcbwk::harness::cli_main(std::env::args_os());
    ExitCode::from(code as u8)
}
