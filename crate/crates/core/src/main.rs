use std::process::ExitCode;

fn main() -> ExitCode {
    lcflow::cli::main_entry()
}
