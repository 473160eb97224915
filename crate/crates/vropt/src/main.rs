use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vropt::check::{format_table, run_checks};
use vropt::plot::{write_svg, PlotOptions};
use vropt::trace::{read_trace_file, write_trace_csv};
use vropt::{registry, run_experiment, ExperimentConfig, RunOutput, VroptError};

#[derive(Parser)]
#[command(name = "vropt", version, about = "Variance-reduced finite-sum optimizers: experiments and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sequential experiment (zerosarah, sarah, gd).
    Run { config: PathBuf },
    /// Run a federated experiment (d-zerosarah, d-sarah).
    RunDist { config: PathBuf },
    /// Run the brute-force verification oracles.
    Check,
    /// Plot gradient norm against gradient count for one or more traces.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
    /// Explain where to get the registered datasets.
    FetchInstructions,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(&config, false),
        Command::RunDist { config } => run(&config, true),
        Command::Check => {
            let outcomes = run_checks();
            print!("{}", format_table(&outcomes));
            if outcomes.iter().all(|o| o.passed) {
                Ok(())
            } else {
                return ExitCode::from(1);
            }
        }
        Command::Plot { csv, output, title } => plot(&csv, &output, title),
        Command::FetchInstructions => {
            print!("{}", registry::fetch_instructions());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(path: &Path, distributed: bool) -> Result<(), VroptError> {
    let cfg = ExperimentConfig::from_file(path)?;
    if cfg.algorithm.is_distributed() != distributed {
        let (wanted, other) = if distributed { ("run-dist", "run") } else { ("run", "run-dist") };
        return Err(VroptError::InvalidConfig(format!(
            "`{}` cannot be used with `{wanted}`; use `{other}`",
            cfg.algorithm.name()
        )));
    }
    let out = run_experiment(&cfg)?;
    emit(&cfg, &out)?;
    match out.divergence {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn emit(cfg: &ExperimentConfig, out: &RunOutput) -> Result<(), VroptError> {
    let distributed = out.is_distributed();
    match &cfg.output_csv {
        Some(path) => vropt::trace::write_trace_file(&out.trace, distributed, path)?,
        None => write_trace_csv(&out.trace, distributed, std::io::stdout().lock())?,
    }
    if let Some(svg) = &cfg.output_svg {
        write_svg(&[(out.label.clone(), out.trace.clone())], &PlotOptions::default(), svg)?;
    }
    let mut err = std::io::stderr().lock();
    let last = out.trace.last().expect("trace starts with x0");
    let _ = writeln!(
        err,
        "{}: L = {:.6e}, {} iterations, paper_count {}, actual_count {}, full-batch events {}, final |grad f| {:.6e}",
        out.label,
        out.smoothness,
        last.iter,
        out.counters.paper_count,
        out.counters.actual_count,
        out.counters.full_batch_events,
        last.grad_norm
    );
    for note in &out.notes {
        let _ = writeln!(err, "note: {note}");
    }
    if let Some(b) = &out.bound {
        let _ = writeln!(
            err,
            "bound: E|grad f(x^)|^2 <= {:.6e} after {} iterations (Delta0 {}{:.6e}, G0 {:.6e}); drew x^ = x^{} with |grad f|^2 = {:.6e}",
            b.bound,
            b.iterations,
            if b.delta0_is_proxy { "proxy " } else { "" },
            b.delta0,
            b.g0,
            b.selected_iteration,
            b.selected_grad_norm_sq
        );
    }
    if let Some(e) = &out.divergence {
        let _ = writeln!(err, "diverged: {e}; trace truncated");
    }
    Ok(())
}

fn plot(csvs: &[PathBuf], output: &Path, title: Option<String>) -> Result<(), VroptError> {
    let traces = csvs
        .iter()
        .map(|p| {
            let label = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            read_trace_file(p).map(|t| (label, t))
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_svg(&traces, &PlotOptions { title }, output)
}
