use std::process::ExitCode;

fn main() -> ExitCode {
    alpha_cheeger::cli::main_with_args(std::env::args_os())
}
