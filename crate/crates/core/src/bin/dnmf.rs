use std::process::ExitCode;

fn main() -> ExitCode {
    dnmf::cli::main_from(std::env::args_os())
}
