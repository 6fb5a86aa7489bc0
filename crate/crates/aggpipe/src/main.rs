use std::process::ExitCode;

fn main() -> ExitCode {
    aggpipe::cli::main()
}
