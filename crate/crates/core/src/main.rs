use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use wirecut::circuit::{parse_document, CircuitDocument};
use wirecut::decomposition::{default_table, validate_table, DecompositionScheme, VALIDITY_TOL};
use wirecut::harness::{
    evaluate_variance, generate_benchmark, run_pipeline, BenchmarkKind, Preset, RunConfig,
};
use wirecut::optimizer::OptimizerMethod;
use wirecut::partition::{apply_cuts, enumerate_configurations, DEFAULT_WIDTH_LIMIT};
use wirecut::{CutError, Result};

#[derive(Parser)]
#[command(name = "wirecut", version, about = "Wire cutting with variance-optimal shot allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one pipeline and write the report.
    Run(RunArgs),
    /// Repeat the pipeline and measure the empirical variance.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        /// Preset to compare against, e.g. `baseline`.
        #[arg(long)]
        compare: Option<Preset>,
    },
    /// Write a benchmark circuit with suggested cuts.
    Gen {
        #[arg(long)]
        kind: BenchmarkKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a circuit parses and partitions, and that the tables are valid.
    Validate {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WIDTH_LIMIT)]
        width_limit: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, default_value = "A")]
    preset: Preset,
    /// Total shot budget; defaults to 1000 per configuration.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    prior_ratio: Option<f64>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    scheme: Option<DecompositionScheme>,
    #[arg(long)]
    opt_iters: Option<usize>,
    #[arg(long)]
    optimizer: Option<OptimizerMethod>,
    #[arg(long)]
    step_size: Option<f64>,
    /// Use exact configuration distributions instead of sampling.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = DEFAULT_WIDTH_LIMIT)]
    width_limit: usize,
}

fn read_document(path: &Path) -> Result<CircuitDocument> {
    let text = std::fs::read_to_string(path)?;
    parse_document(&text)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text.as_bytes()).map_err(Into::into),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(Into::into),
        },
    }
}

impl RunArgs {
    fn config(&self, doc: &CircuitDocument) -> Result<RunConfig> {
        let scheme = self.scheme.unwrap_or(RunConfig::from_preset(self.preset, 0, 0).scheme);
        let shots = match self.shots {
            Some(n) => n,
            None => {
                let p = apply_cuts(&doc.circuit(), &doc.cuts, self.width_limit)?;
                1000 * enumerate_configurations(&p, scheme).len() as u64
            }
        };
        let mut cfg = RunConfig::from_preset(self.preset, shots, self.seed);
        cfg.circuit_path = Some(self.circuit.display().to_string());
        cfg.scheme = scheme;
        cfg.exact = self.exact;
        cfg.width_limit = self.width_limit;
        if let Some(r) = self.prior_ratio {
            cfg.prior_ratio = r;
        }
        if let Some(s) = self.segments {
            cfg.segments = s;
        }
        if let Some(i) = self.opt_iters {
            cfg.optimizer.iterations = i;
        }
        if let Some(m) = self.optimizer {
            cfg.optimizer.method = m;
        }
        if let Some(s) = self.step_size {
            cfg.optimizer.step_size = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let doc = read_document(&args.circuit)?;
            let cfg = args.config(&doc)?;
            let report = run_pipeline(&cfg, &doc)?;
            emit(&report.to_json(), args.out.as_deref())
        }
        Command::Evaluate { run, reps, compare } => {
            let doc = read_document(&run.circuit)?;
            let mut cfg = run.config(&doc)?;
            cfg.repetitions = reps;
            let report = evaluate_variance(&cfg, &doc, reps, compare)?;
            emit(&report.to_json(), run.out.as_deref())
        }
        Command::Gen { kind, n, seed, out } => {
            let bench = generate_benchmark(kind, n, seed)?;
            emit(&bench.document().to_json(), out.as_deref())
        }
        Command::Validate {
            circuit,
            width_limit,
        } => {
            let doc = read_document(&circuit)?;
            let p = apply_cuts(&doc.circuit(), &doc.cuts, width_limit)?;
            let mut schemes = serde_json::Map::new();
            for scheme in [
                DecompositionScheme::L8Preset,
                DecompositionScheme::L4Preset,
                DecompositionScheme::ParamL6,
                DecompositionScheme::ParamL4,
            ] {
                let residual = validate_table(&default_table(scheme));
                if residual > VALIDITY_TOL {
                    return Err(CutError::InvalidArgument(format!(
                        "{} table residual {residual:e}",
                        scheme.name()
                    )));
                }
                schemes.insert(
                    scheme.name().to_string(),
                    json!({
                        "num_configurations": enumerate_configurations(&p, scheme).len(),
                        "table_residual": residual,
                    }),
                );
            }
            let summary = json!({
                "valid": true,
                "num_qubits": p.num_qubits,
                "num_gates": doc.gates.len(),
                "num_cuts": p.num_cuts(),
                "fragment_widths": p.fragments.iter().map(|f| f.width()).collect::<Vec<_>>(),
                "schemes": schemes,
            });
            emit(&serde_json::to_string_pretty(&summary)?, None)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
