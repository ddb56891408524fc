use std::process::ExitCode;

fn main() -> ExitCode {
    censim::cli::run()
}
