use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(spin_transfer::cli::run() as u8)
}
