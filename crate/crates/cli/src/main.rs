use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shfl_cli::kkt::{cmd_verify_kkt, Source};
use shfl_cli::plot::cmd_plot_data;
use shfl_cli::run::cmd_run;
use shfl_cli::CliError;

/// Secure hierarchical federated learning simulator.
#[derive(Parser)]
#[command(name = "shfl", version)]
struct Cli {
    /// Worker threads for client training (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write per-round CSV plus a JSON summary.
    Run {
        config: PathBuf,
        #[arg(short, long, default_value = "results.csv")]
        out: PathBuf,
        /// Summary path (default: the CSV path with a .json extension).
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(short, long)]
        quiet: bool,
    },
    /// Check closed-form cloud weights against the bisection oracle.
    VerifyKkt {
        /// File of `x1,...,xn;zeta;tau` lines.
        #[arg(required_unless_present = "random", conflicts_with = "random")]
        instances: Option<PathBuf>,
        /// Generate this many random instances instead.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV (default: stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Merge run CSVs into (experiment_label, round, accuracy) rows.
    PlotData {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// One label per input (default: file stems).
        #[arg(short, long)]
        label: Vec<String>,
        /// Output CSV (default: stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn std::io::Write>, CliError> {
    match path {
        Some(p) => std::fs::File::create(p)
            .map(|f| Box::new(std::io::BufWriter::new(f)) as Box<dyn std::io::Write>)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", p.display()))),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            out,
            summary,
            quiet,
        } => {
            let s = cmd_run(&config, &out, summary.as_deref(), quiet)?;
            eprintln!(
                "max accuracy {:.4}, final accuracy {:.4} over {} rounds -> {}",
                s.max_accuracy,
                s.final_accuracy,
                s.rounds,
                out.display()
            );
            Ok(())
        }
        Command::VerifyKkt {
            instances,
            random,
            seed,
            out,
        } => {
            let source = match (&instances, random) {
                (_, Some(count)) => Source::Random { count, seed },
                (Some(path), None) => Source::File(path),
                (None, None) => unreachable!("clap requires one source"),
            };
            let report = cmd_verify_kkt(source, output(out.as_ref())?, std::io::stderr())?;
            eprintln!("{} instances agree with the oracle", report.checked);
            Ok(())
        }
        Command::PlotData { inputs, label, out } => {
            let paths: Vec<&std::path::Path> = inputs.iter().map(PathBuf::as_path).collect();
            let labels = (!label.is_empty()).then_some(label.as_slice());
            cmd_plot_data(&paths, labels, output(out.as_ref())?)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| dispatch(cli.command)),
        Err(e) => Err(CliError::Runtime(format!("thread pool: {e}"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
