use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(iga_laminate::cli::main() as u8)
}
