use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use emln_dg::cli::{self, Invocation, Mode};
use emln_dg::{compare_protocols, output, range_sweep, run_experiment, run_trials};

fn run(inv: &Invocation) -> emln_dg::Result<()> {
    let sink: Box<dyn Write> = match &inv.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match inv.mode {
        Mode::PerRound => {
            let reports = run_trials(&inv.config)?;
            output::write_rounds(sink, &reports, inv.format)
        }
        Mode::Experiment => output::write_aggregates(sink, &[run_experiment(&inv.config)?], inv.format),
        Mode::Sweep => output::write_aggregates(sink, &range_sweep(&inv.config, &inv.sweep)?, inv.format),
        Mode::Compare => output::write_aggregates(sink, &compare_protocols(&inv.config)?, inv.format),
    }
}

fn main() -> ExitCode {
    let inv = match cli::parse_args(std::env::args_os()) {
        Err(clap_err) => clap_err.exit(),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Ok(Ok(inv)) => inv,
    };
    for w in &inv.warnings {
        eprintln!("warning: {w}");
    }
    match run(&inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
