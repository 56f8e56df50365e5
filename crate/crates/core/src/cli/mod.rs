//! The `multipose` command-line front end.

mod args;
mod commands;
pub mod pipeline;

use std::ffi::OsString;

pub use args::{config_tokens, parse_args, Cli, Command, ParseFailure};
pub use commands::{cmd_ablate, cmd_eval, cmd_infer, cmd_synth, cmd_train, cmd_tune_temp, read_estimates};

/// Runs one invocation and returns the process exit code. Failures print a
/// single `error: ...` line on standard error.
pub fn run(args: Vec<OsString>) -> i32 {
    let cli = match parse_args(args) {
        Ok(c) => c,
        Err(ParseFailure::Clap(e)) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(ParseFailure::Clap(e)) => {
            let text = e.render().to_string();
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("{}", line.trim());
            return 2;
        }
        Err(ParseFailure::Config(e)) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::TuneTemp(a) => cmd_tune_temp(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            1
        }
    }
}
