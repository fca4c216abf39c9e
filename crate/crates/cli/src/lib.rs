//! Command-line driver: build/param-count, WAV inference, training on
//! synthetic or directory data, gradient checking, the stability
//! experiment, and a simple single-stream latency bench.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage or config error.

mod args;
mod commands;

use std::io::Write;

pub const USAGE: &str = "\
usage: fast <subcommand> [flags]

subcommands:
  params     --config <path|tiny|full> [--classes N]
             print the per-layer parameter table and total count
  infer      --config <..> --checkpoint <file.fstc> --wav <file>...
             [--multilabel] [--dump-spectrogram <dir>] [--seed N]
             per-file class scores as CSV rows on stdout
  train      --config <..> (--synthetic | --data <dir>) [--steps N]
             [--epochs N] [--batch-size B] [--lr R] [--seed N]
             [--schedule constant|halve-after-2] [--out <csv>]
             [--save <file.fstc>]
  gradcheck  [--module <name>] [--seeds N]
             finite-difference gradient suites; exit 1 on any failure
  stability  --config <..> [--steps N] [--lrs a,b,..] [--batch-size B]
             [--seed N] [--out <csv>]
             train Lipschitz and baseline variants at each rate
  bench      --config <..> [--iters N] [--warmup N] [--seed N]
             single-sample forward latency (mean and p95)
";

/// Entry point shared by the binary and the integration tests.
pub fn run(args: &[String], out: &mut dyn Write) -> i32 {
    let Some((command, rest)) = args.split_first() else {
        eprint!("{USAGE}");
        return 2;
    };
    let result = match command.as_str() {
        "params" => commands::params(rest, out),
        "infer" => commands::infer(rest, out),
        "train" => commands::train(rest, out),
        "gradcheck" => commands::gradcheck(rest, out),
        "stability" => commands::stability(rest, out),
        "bench" => commands::bench(rest, out),
        "--help" | "-h" | "help" => {
            let _ = write!(out, "{USAGE}");
            return 0;
        }
        other => {
            eprintln!("unknown subcommand `{other}`");
            eprint!("{USAGE}");
            return 2;
        }
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}
