use std::process::ExitCode;

fn main() -> ExitCode {
    feshscan::cli::run()
}
