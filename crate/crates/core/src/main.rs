use std::process::ExitCode;

fn main() -> ExitCode {
    postsim::cli::run()
}
