use std::process::ExitCode;

fn main() -> ExitCode {
    osc_transport_cli::run(std::env::args_os())
}
