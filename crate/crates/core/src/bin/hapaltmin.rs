use std::panic;
use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let code = panic::catch_unwind(|| hapaltmin::cli::run(args)).unwrap_or(hapaltmin::cli::EXIT_INTERNAL);
    ExitCode::from(code as u8)
}
