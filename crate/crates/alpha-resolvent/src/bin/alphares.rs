use std::process::ExitCode;

fn main() -> ExitCode {
    alpha_resolvent::cli::main_entry()
}
