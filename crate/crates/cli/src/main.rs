use std::process::ExitCode;

fn main() -> ExitCode {
    match lvq_cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lvq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
