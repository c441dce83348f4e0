use std::process::ExitCode;

fn main() -> ExitCode {
    tscgp::cli::main()
}
