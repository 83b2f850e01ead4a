use std::process::ExitCode;

fn main() -> ExitCode {
    jtdec::harness::cli::main()
}
