//! `divsum`: command-line experiments on divisor-function exponential sums.
//!
//! Results go to standard output as one JSON object or one CSV table and
//! diagnostics to standard error. Exit status is 0 on success, 1 on usage or
//! validation errors and 2 when a numeric budget was exhausted.

mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use commands::Command;
use output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "divsum",
    version,
    about = "Divisor-function exponential sums and their functional equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    output: Format,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "DIVSUM_THREADS", default_value_t = 0)]
    threads: usize,
}

fn run(cli: &Cli) -> divsum::Result<(output::Rendered, bool)> {
    match &cli.command {
        Command::Sum(a) => commands::sum(a),
        Command::Farey(a) => commands::farey(a),
        Command::Afe(a) => commands::afe(a),
        Command::Voronoi(a) => commands::voronoi(a),
        Command::Saddle(a) => commands::saddle(a),
        Command::Measure(a) => commands::measure(a, cli.seed),
        Command::Sweep(a) => commands::sweep(a, cli.seed),
        Command::Meansq(a) => commands::meansq(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let (rendered, exhausted) = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if matches!(e, divsum::Error::BudgetExhausted(_)) {
                2
            } else {
                1
            });
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if let Err(e) = rendered.write(cli.output, &mut out).and_then(|()| out.flush()) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    if exhausted {
        eprintln!("error: numeric budget exhausted; results flagged");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
