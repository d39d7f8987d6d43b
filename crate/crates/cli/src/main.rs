//! `npreg` command-line front end.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 numerical degeneracy. Errors
//! go to stderr as one line, `npreg: error[<kind>]: <message>`.

mod args;
mod commands;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use commands::Failure;

fn fail(f: &Failure) -> ! {
    let msg = f.message().split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("npreg: error[{}]: {msg}", f.kind());
    std::process::exit(f.code())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            e.exit()
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("bad arguments");
            fail(&Failure::Usage(first.trim_start_matches("error: ").to_string()))
        }
    };
    if let Err(f) = commands::run(&cli) {
        fail(&f);
    }
}
