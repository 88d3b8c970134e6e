use clap::Parser;

use igatwo::cli::{dispatch, CliArgs};

fn main() {
    let args = match CliArgs::try_parse() {
        Ok(args) => args,
        Err(err) => {
            // clap's own help/version output goes to stdout with code 0.
            if err.use_stderr() {
                eprintln!("{err}");
                std::process::exit(1);
            }
            print!("{err}");
            std::process::exit(0);
        }
    };
    std::process::exit(dispatch(args));
}
